use std::fs;
use std::path::PathBuf;
use std::process::{Command, Stdio};

use chrono::Utc;

use super::{
    cache_context, parse_compile_diagnostics, CaptureConfig, CaptureError, Diagnostic, ErrorContext, ErrorKind,
    Severity, SourceFile,
};

/// Instrumentation added ahead of the user's own flags.
pub const SANITIZER_FLAGS: &[&str] = &[
    "-g",
    "-fno-omit-frame-pointer",
    "-fsanitize=address,undefined",
    "-fno-sanitize-recover=undefined",
];

pub const LAUNCH_HINT: &str =
    "sidekick: run dcc-help for a quick explanation, or dcc-sidekick to talk it through in your browser.";

const SOURCE_EXTENSIONS: &[&str] = &["c", "h", "cc", "cpp", "cxx", "hpp"];

#[derive(Debug)]
pub enum CompileOutcome {
    Success,
    Failure { context: ErrorContext, cache_path: PathBuf },
}

/// Result of one wrapped compiler run, with the streams the caller should
/// forward to the user.
#[derive(Debug)]
pub struct CompileReport {
    pub exit_status: i32,
    pub stdout: Vec<u8>,
    pub stderr: Vec<u8>,
    pub outcome: CompileOutcome,
}

/// Picks out the source-file arguments (by extension), skipping the operand
/// of `-o`.
pub fn split_sources(args: &[String]) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut skip_next = false;
    for arg in args {
        if skip_next {
            skip_next = false;
            continue;
        }
        if arg == "-o" {
            skip_next = true;
            continue;
        }
        if arg.starts_with('-') {
            continue;
        }
        let path = PathBuf::from(arg);
        let is_source = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| SOURCE_EXTENSIONS.contains(&e));
        if is_source {
            out.push(path);
        }
    }
    out
}

/// Runs the configured compiler over `args` and caches an [`ErrorContext`]
/// when it exits non-zero.
pub fn wrap_compile(config: &CaptureConfig, args: &[String]) -> Result<CompileReport, CaptureError> {
    let sources = split_sources(args);
    let mut source_files = Vec::with_capacity(sources.len());
    for path in &sources {
        let text = fs::read_to_string(path).map_err(|source| CaptureError::Source { path: path.clone(), source })?;
        source_files.push(SourceFile { path: path.display().to_string(), text });
    }

    let mut full_args: Vec<String> = Vec::new();
    if config.sanitize {
        full_args.extend(SANITIZER_FLAGS.iter().map(|s| s.to_string()));
    }
    full_args.extend(args.iter().cloned());

    let output = Command::new(&config.compiler)
        .args(&full_args)
        .stdin(Stdio::null())
        .output()
        .map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => {
                CaptureError::Configuration(format!("compiler `{}` not found", config.compiler))
            }
            _ => CaptureError::Io(e),
        })?;

    let exit_status = exit_code(&output.status);
    if output.status.success() {
        return Ok(CompileReport {
            exit_status,
            stdout: output.stdout,
            stderr: output.stderr,
            outcome: CompileOutcome::Success,
        });
    }

    let stderr_text = String::from_utf8_lossy(&output.stderr);
    let mut diagnostics = parse_compile_diagnostics(&stderr_text);
    if !diagnostics.iter().any(|d| d.severity == Severity::Error) {
        if let Some(d) = fallback_diagnostic(&stderr_text, &sources) {
            diagnostics.push(d);
        }
    }
    if source_files.is_empty() {
        // e.g. linking pre-built objects; keep the invariant with a stand-in
        source_files.push(SourceFile { path: "(no source files)".into(), text: String::new() });
    }

    let context = ErrorContext {
        kind: ErrorKind::CompileTime,
        created_at: Utc::now(),
        source_files,
        compiler_invocation: shell_join(&config.compiler, &full_args),
        diagnostics,
        runtime_signal: None,
        stack: Vec::new(),
        stdin_excerpt: None,
        exit_status,
    };
    let cache_path = cache_context(&context, &config.cache_dir)?;
    Ok(CompileReport {
        exit_status,
        stdout: output.stdout,
        stderr: output.stderr,
        outcome: CompileOutcome::Failure { context, cache_path },
    })
}

/// Linker failures and similar carry no `file:line:` prefix. Anchor them to
/// line 1 of the first source so the context stays usable.
fn fallback_diagnostic(stderr: &str, sources: &[PathBuf]) -> Option<Diagnostic> {
    let line = stderr
        .lines()
        .find(|l| l.contains("undefined reference") || l.contains("error"))
        .or_else(|| stderr.lines().find(|l| !l.trim().is_empty()))?;
    let file = sources
        .first()
        .map(|p| p.display().to_string())
        .unwrap_or_else(|| "(linker)".to_string());
    Some(Diagnostic {
        file,
        line: 1,
        column: 0,
        severity: Severity::Error,
        message: line.trim().to_string(),
        raw: stderr.trim_end().to_string(),
    })
}

pub(crate) fn exit_code(status: &std::process::ExitStatus) -> i32 {
    #[cfg(unix)]
    {
        use std::os::unix::process::ExitStatusExt;
        if let Some(sig) = status.signal() {
            return 128 + sig;
        }
    }
    status.code().unwrap_or(-1)
}

pub(crate) fn shell_join(program: &str, args: &[String]) -> String {
    std::iter::once(program)
        .chain(args.iter().map(String::as_str))
        .map(|a| {
            if a.is_empty() || a.contains(|c: char| c.is_whitespace() || "'\"$\\".contains(c)) {
                format!("'{}'", a.replace('\'', r"'\''"))
            } else {
                a.to_string()
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}
