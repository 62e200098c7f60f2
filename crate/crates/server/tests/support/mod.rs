#![allow(dead_code)]

use std::sync::Arc;

use chrono::{TimeZone, Utc};
use sidekick_core::capture::{
    Diagnostic, ErrorContext, ErrorKind, Severity, SourceFile, StackFrame, VariableBinding,
};
use sidekick_core::llm::MockBackend;
use sidekick_core::telemetry::StaffList;
use sidekick_server::{ManualClock, ServiceConfig, SessionService, Store};

pub fn compile_ctx() -> ErrorContext {
    ErrorContext {
        kind: ErrorKind::CompileTime,
        created_at: Utc.with_ymd_and_hms(2024, 3, 4, 10, 0, 0).unwrap(),
        source_files: vec![SourceFile {
            path: "count.c".into(),
            text: "#include <stdio.h>\n\nint main(void) {\n    int count = 3;\n    printf(\"%d\\n\", count)\n    return 0;\n}\n".into(),
        }],
        compiler_invocation: "gcc count.c -o count".into(),
        diagnostics: vec![Diagnostic {
            file: "count.c".into(),
            line: 5,
            column: 29,
            severity: Severity::Error,
            message: "expected ';' before 'return'".into(),
            raw: "count.c:5:29: error: expected ';' before 'return'".into(),
        }],
        runtime_signal: None,
        stack: vec![],
        stdin_excerpt: None,
        exit_status: 1,
    }
}

pub fn run_ctx() -> ErrorContext {
    ErrorContext {
        kind: ErrorKind::RunTime,
        created_at: Utc.with_ymd_and_hms(2024, 3, 4, 10, 0, 0).unwrap(),
        source_files: vec![SourceFile { path: "list.c".into(), text: "int main(void) { return 0; }\n".into() }],
        compiler_invocation: "gcc -g list.c".into(),
        diagnostics: vec![],
        runtime_signal: Some("SIGSEGV".into()),
        stack: vec![StackFrame {
            function_name: "last_value".into(),
            file: "list.c".into(),
            line: 10,
            locals: vec![VariableBinding { name: "list".into(), type_name: "struct node *".into(), value_repr: "0x0".into() }],
        }],
        stdin_excerpt: None,
        exit_status: 1,
    }
}

pub struct Harness {
    pub service: Arc<SessionService>,
    pub backend: Arc<MockBackend>,
    pub clock: Arc<ManualClock>,
}

pub fn harness(backend: MockBackend) -> Harness {
    harness_with(backend, ServiceConfig::default(), StaffList::default())
}

pub fn harness_with(backend: MockBackend, config: ServiceConfig, staff: StaffList) -> Harness {
    let backend = Arc::new(backend);
    let clock = Arc::new(ManualClock::new(Utc.with_ymd_and_hms(2024, 3, 4, 10, 0, 0).unwrap()));
    let store = Arc::new(Store::open_in_memory(staff).unwrap());
    let service = Arc::new(SessionService::new(store, backend.clone(), clock.clone(), config));
    Harness { service, backend, clock }
}
