use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::Duration;

use chrono::Utc;
use wait_timeout::ChildExt;

use super::compile::{exit_code, shell_join};
use super::{
    cache_context, parse_frame_dump, parse_sanitizer_report, CaptureConfig, CaptureError, Diagnostic, ErrorContext,
    ErrorKind, SanitizerReport, Severity, SourceFile, StackFrame,
};

const STDIN_EXCERPT_LIMIT: usize = 2000;
const VALUE_REPR_LIMIT: usize = 200;
const DEBUGGER_TIMEOUT: Duration = Duration::from_secs(20);

/// Walks every frame from the crash point outwards and prints arguments and
/// locals (with their types) as JSON between two marker lines.
const FRAME_DUMP_SCRIPT: &str = r#"
import gdb, json
def _sidekick_dump():
    out = []
    try:
        f = gdb.newest_frame()
    except gdb.error:
        return
    while f is not None:
        sal = f.find_sal()
        entry = {"function": f.name() or "", "file": sal.symtab.filename if sal.symtab else "", "line": sal.line, "locals": []}
        try:
            block = f.block()
        except RuntimeError:
            block = None
        seen = set()
        while block is not None:
            for sym in block:
                if (sym.is_argument or sym.is_variable) and sym.name not in seen:
                    seen.add(sym.name)
                    try:
                        val = str(sym.value(f))
                    except Exception:
                        val = "<unavailable>"
                    entry["locals"].append({"name": sym.name, "type_name": str(sym.type), "value_repr": val})
            if block.function is not None:
                break
            block = block.superblock
        out.append(entry)
        f = f.older()
    print("SIDEKICK_FRAMES_BEGIN")
    print(json.dumps(out))
    print("SIDEKICK_FRAMES_END")
_sidekick_dump()
"#;

#[derive(Debug)]
pub enum RunOutcome {
    Success,
    Failure { context: ErrorContext, cache_path: PathBuf },
}

#[derive(Debug)]
pub struct RunReport {
    pub exit_status: i32,
    /// Empty when stdout was passed straight through to the terminal.
    pub stdout: Vec<u8>,
    pub stderr: Vec<u8>,
    pub outcome: RunOutcome,
}

/// Runs a sanitizer-instrumented program and, if it dies abnormally, caches a
/// run-time [`ErrorContext`] describing the crash.
///
/// "Abnormal" means killed by a signal or stopped by a sanitizer report; a
/// program that merely returns a non-zero status is not a crash.
pub fn run_with_capture(
    config: &CaptureConfig,
    executable: &Path,
    args: &[String],
    stdin: Option<&str>,
) -> Result<RunReport, CaptureError> {
    if !executable.is_file() {
        return Err(CaptureError::Configuration(format!(
            "executable {} does not exist",
            executable.display()
        )));
    }
    let program = resolve_program(executable);

    let mut cmd = Command::new(&program);
    cmd.args(args).stderr(Stdio::piped());
    set_sanitizer_env(&mut cmd, false);
    match stdin {
        Some(_) => cmd.stdin(Stdio::piped()),
        None if config.passthrough => cmd.stdin(Stdio::inherit()),
        None => cmd.stdin(Stdio::null()),
    };
    cmd.stdout(if config.passthrough { Stdio::inherit() } else { Stdio::piped() });

    let mut child = cmd.spawn().map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound | std::io::ErrorKind::PermissionDenied => {
            CaptureError::Configuration(format!("cannot execute {}: {e}", executable.display()))
        }
        _ => CaptureError::Io(e),
    })?;

    if let (Some(text), Some(mut pipe)) = (stdin, child.stdin.take()) {
        let text = text.to_string();
        std::thread::spawn(move || {
            let _ = pipe.write_all(text.as_bytes());
        });
    }
    let stdout_reader = child.stdout.take().map(|mut out| {
        std::thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = out.read_to_end(&mut buf);
            buf
        })
    });
    let passthrough = config.passthrough;
    let stderr_reader = child.stderr.take().map(|mut err| {
        std::thread::spawn(move || {
            let mut buf = Vec::new();
            let mut chunk = [0u8; 4096];
            loop {
                match err.read(&mut chunk) {
                    Ok(0) | Err(_) => break,
                    Ok(n) => {
                        if passthrough {
                            let _ = std::io::stderr().write_all(&chunk[..n]);
                        }
                        buf.extend_from_slice(&chunk[..n]);
                    }
                }
            }
            buf
        })
    });

    let status = child.wait()?;
    let stdout = stdout_reader.and_then(|h| h.join().ok()).unwrap_or_default();
    let stderr = stderr_reader.and_then(|h| h.join().ok()).unwrap_or_default();
    let exit_status = exit_code(&status);

    let stderr_text = String::from_utf8_lossy(&stderr);
    let report = parse_sanitizer_report(&stderr_text);
    let signal = terminating_signal(&status);

    let runtime_signal = match (&report, signal) {
        (Some(r), _) => r.signal_label(),
        (None, Some(sig)) => sig,
        (None, None) => {
            return Ok(RunReport { exit_status, stdout, stderr, outcome: RunOutcome::Success });
        }
    };

    let debugger_frames = config
        .debugger
        .as_deref()
        .and_then(|dbg| debugger_frames(dbg, &program, args, stdin));

    let stack = build_stack(report.as_ref(), debugger_frames);
    let diagnostics = runtime_diagnostics(report.as_ref(), &runtime_signal, &stack);
    let source_files = collect_sources(&stack, &diagnostics, executable);

    let context = ErrorContext {
        kind: ErrorKind::RunTime,
        created_at: Utc::now(),
        source_files,
        compiler_invocation: shell_join(&executable.display().to_string(), args),
        diagnostics,
        runtime_signal: Some(runtime_signal),
        stack,
        stdin_excerpt: stdin.map(|s| s.chars().take(STDIN_EXCERPT_LIMIT).collect()),
        exit_status,
    };
    let cache_path = cache_context(&context, &config.cache_dir)?;
    Ok(RunReport {
        exit_status,
        stdout,
        stderr,
        outcome: RunOutcome::Failure { context, cache_path },
    })
}

/// `Command` searches `$PATH` for bare names; a plain file name here means a
/// file in the working directory.
fn resolve_program(executable: &Path) -> PathBuf {
    if executable.components().count() == 1 {
        Path::new(".").join(executable)
    } else {
        executable.to_path_buf()
    }
}

fn set_sanitizer_env(cmd: &mut Command, under_debugger: bool) {
    let mut asan = std::env::var("ASAN_OPTIONS").unwrap_or_default();
    if !asan.contains("detect_leaks") {
        push_opt(&mut asan, "detect_leaks=0");
    }
    if under_debugger {
        // stop inside the process instead of exiting so frames are still live
        push_opt(&mut asan, "abort_on_error=1");
    }
    cmd.env("ASAN_OPTIONS", asan);
    let mut ubsan = std::env::var("UBSAN_OPTIONS").unwrap_or_default();
    if !ubsan.contains("print_stacktrace") {
        push_opt(&mut ubsan, "print_stacktrace=1");
    }
    if under_debugger {
        push_opt(&mut ubsan, "abort_on_error=1");
    }
    cmd.env("UBSAN_OPTIONS", ubsan);
}

fn push_opt(opts: &mut String, opt: &str) {
    if !opts.is_empty() {
        opts.push(':');
    }
    opts.push_str(opt);
}

fn terminating_signal(status: &std::process::ExitStatus) -> Option<String> {
    #[cfg(unix)]
    {
        use std::os::unix::process::ExitStatusExt;
        status.signal().map(signal_name)
    }
    #[cfg(not(unix))]
    {
        let _ = status;
        None
    }
}

fn signal_name(sig: i32) -> String {
    match sig {
        4 => "SIGILL".into(),
        6 => "SIGABRT".into(),
        7 => "SIGBUS".into(),
        8 => "SIGFPE".into(),
        9 => "SIGKILL".into(),
        11 => "SIGSEGV".into(),
        13 => "SIGPIPE".into(),
        15 => "SIGTERM".into(),
        other => format!("signal {other}"),
    }
}

/// Re-runs the program under the debugger to recover local variables at the
/// crash point. Any failure just means no locals.
fn debugger_frames(debugger: &str, program: &Path, args: &[String], stdin: Option<&str>) -> Option<Vec<StackFrame>> {
    let mut script = tempfile::Builder::new().suffix(".py").tempfile().ok()?;
    script.write_all(FRAME_DUMP_SCRIPT.as_bytes()).ok()?;
    script.flush().ok()?;

    let mut cmd = Command::new(debugger);
    cmd.args(["-nx", "-batch", "-ex", "set pagination off", "-ex", "set print elements 32", "-ex", "run", "-x"])
        .arg(script.path())
        .arg("--args")
        .arg(program)
        .args(args)
        .stdin(if stdin.is_some() { Stdio::piped() } else { Stdio::null() })
        .stdout(Stdio::piped())
        .stderr(Stdio::null());
    set_sanitizer_env(&mut cmd, true);

    let mut child = cmd.spawn().ok()?;
    if let (Some(text), Some(mut pipe)) = (stdin, child.stdin.take()) {
        let text = text.to_string();
        std::thread::spawn(move || {
            let _ = pipe.write_all(text.as_bytes());
        });
    }
    let mut out = child.stdout.take()?;
    let reader = std::thread::spawn(move || {
        let mut buf = String::new();
        let _ = out.read_to_string(&mut buf);
        buf
    });
    if child.wait_timeout(DEBUGGER_TIMEOUT).ok()?.is_none() {
        let _ = child.kill();
        let _ = child.wait();
        return None;
    }
    let text = reader.join().ok()?;
    parse_frame_dump(&text)
}

fn is_user_frame(frame: &StackFrame) -> bool {
    !frame.function_name.starts_with("__")
        && !frame.file.starts_with("/usr/")
        && Path::new(&frame.file).is_file()
}

fn truncate_repr(mut s: String) -> String {
    if s.chars().count() > VALUE_REPR_LIMIT {
        s = s.chars().take(VALUE_REPR_LIMIT).collect();
        s.push_str("...");
    }
    s
}

/// Sanitizer frames give the authoritative call chain; debugger frames fill
/// in locals by matching function names in order.
fn build_stack(report: Option<&SanitizerReport>, debugger: Option<Vec<StackFrame>>) -> Vec<StackFrame> {
    let debugger: Vec<StackFrame> = debugger
        .unwrap_or_default()
        .into_iter()
        .filter(is_user_frame)
        .map(|mut f| {
            for v in &mut f.locals {
                v.value_repr = truncate_repr(std::mem::take(&mut v.value_repr));
            }
            f
        })
        .collect();

    let sanitizer: Vec<StackFrame> = report
        .map(|r| r.frames.iter().filter(|f| is_user_frame(f)).cloned().collect())
        .unwrap_or_default();
    if sanitizer.is_empty() {
        return debugger;
    }

    let mut next = 0;
    sanitizer
        .into_iter()
        .map(|mut frame| {
            if let Some(pos) = debugger[next.min(debugger.len())..]
                .iter()
                .position(|d| d.function_name == frame.function_name)
            {
                frame.locals = debugger[next + pos].locals.clone();
                next += pos + 1;
            }
            frame
        })
        .collect()
}

fn runtime_diagnostics(report: Option<&SanitizerReport>, signal: &str, stack: &[StackFrame]) -> Vec<Diagnostic> {
    let Some(report) = report else {
        return stack
            .first()
            .map(|top| Diagnostic {
                file: top.file.clone(),
                line: top.line,
                column: 0,
                severity: Severity::Error,
                message: format!("program terminated by {signal} in {}", top.function_name),
                raw: format!("{signal} in {} at {}:{}", top.function_name, top.file, top.line),
            })
            .into_iter()
            .collect();
    };

    let mut out = report.runtime_errors.clone();
    if report.sanitizer == "UndefinedBehaviorSanitizer" {
        if let Some(first) = out.first_mut() {
            first.raw = report.body.clone();
        }
        return out;
    }
    let location = report
        .summary_location
        .clone()
        .or_else(|| stack.first().map(|f| (f.file.clone(), f.line)));
    if let Some((file, line)) = location {
        out.push(Diagnostic {
            file,
            line,
            column: 0,
            severity: Severity::Error,
            message: report.headline.clone(),
            raw: report.body.clone(),
        });
    }
    out
}

fn collect_sources(stack: &[StackFrame], diagnostics: &[Diagnostic], executable: &Path) -> Vec<SourceFile> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let paths = stack.iter().map(|f| &f.file).chain(diagnostics.iter().map(|d| &d.file));
    for path in paths {
        if !seen.insert(path.clone()) {
            continue;
        }
        if let Ok(text) = std::fs::read_to_string(path) {
            out.push(SourceFile { path: path.clone(), text });
        }
    }
    if out.is_empty() {
        out.push(SourceFile {
            path: executable.display().to_string(),
            text: "(source unavailable)".into(),
        });
    }
    out
}
