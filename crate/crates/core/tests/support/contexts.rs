//! proptest strategies for valid error contexts.

use chrono::{TimeZone, Utc};
use proptest::prelude::*;
use sidekick_core::capture::{
    Diagnostic, ErrorContext, ErrorKind, Severity, SourceFile, StackFrame, VariableBinding,
};

fn word() -> impl Strategy<Value = String> {
    "[a-z_][a-z0-9_]{0,10}"
}

fn text_line() -> impl Strategy<Value = String> {
    "[ -~]{0,40}".prop_map(|s| s.trim_end().to_string())
}

fn severity() -> impl Strategy<Value = Severity> {
    prop_oneof![Just(Severity::Error), Just(Severity::Warning), Just(Severity::Note)]
}

fn diagnostic(file: String) -> impl Strategy<Value = Diagnostic> {
    (1u32..500, 0u32..80, severity(), "[a-z ';]{1,30}").prop_map(move |(line, column, severity, message)| {
        let message = message.trim().to_string();
        Diagnostic {
            raw: format!("{file}:{line}:{column}: {}: {message}", severity.as_str()),
            file: file.clone(),
            line,
            column,
            severity,
            message,
        }
    })
}

fn local() -> impl Strategy<Value = VariableBinding> {
    (word(), prop_oneof![Just(""), Just("int"), Just("struct node *"), Just("char [8]")], "[-0-9a-fx\"]{1,12}")
        .prop_map(|(name, ty, value_repr)| VariableBinding { name, type_name: ty.to_string(), value_repr })
}

fn frame(file: String) -> impl Strategy<Value = StackFrame> {
    (word(), 1u32..500, proptest::collection::vec(local(), 0..4))
        .prop_map(move |(function_name, line, locals)| StackFrame { function_name, file: file.clone(), line, locals })
}

pub fn source_text(max_lines: usize) -> impl Strategy<Value = String> {
    proptest::collection::vec(text_line(), 1..max_lines).prop_map(|lines| lines.join("\n") + "\n")
}

/// A context that passes `ErrorContext::validate`.
pub fn error_context() -> impl Strategy<Value = ErrorContext> {
    let file = "prog.c".to_string();
    (
        any::<bool>(),
        0i64..2_000_000_000,
        source_text(40),
        proptest::collection::vec(diagnostic(file.clone()), 0..4),
        proptest::collection::vec(frame(file.clone()), 1..4),
        proptest::option::of("[ -~\n]{1,50}"),
        "[a-z ]{1,20}",
        -3i32..140,
    )
        .prop_map(move |(compile, secs, text, mut diagnostics, stack, stdin, signal, exit_status)| {
            let kind = if compile { ErrorKind::CompileTime } else { ErrorKind::RunTime };
            if compile && diagnostics.is_empty() {
                diagnostics.push(Diagnostic {
                    file: file.clone(),
                    line: 1,
                    column: 1,
                    severity: Severity::Error,
                    message: "expected ';'".into(),
                    raw: "prog.c:1:1: error: expected ';'".into(),
                });
            }
            ErrorContext {
                kind,
                created_at: Utc.timestamp_opt(secs, 0).unwrap(),
                source_files: vec![SourceFile { path: file.clone(), text }],
                compiler_invocation: "gcc -Wall prog.c -o prog".into(),
                diagnostics,
                runtime_signal: (!compile).then(|| signal.trim().to_string()),
                stack: if compile { vec![] } else { stack },
                stdin_excerpt: if compile { None } else { stdin },
                exit_status,
            }
        })
}
