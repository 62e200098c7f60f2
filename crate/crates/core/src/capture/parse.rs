//! Parsers for compiler stderr, sanitizer reports and the debugger frame dump.

use std::sync::LazyLock;

use regex::Regex;
use serde::Deserialize;

use super::types::{Diagnostic, Severity, StackFrame, VariableBinding};

static DIAGNOSTIC_LINE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"^(?P<file>[^:\s][^:]*?):(?P<line>\d+):(?:(?P<col>\d+):)? (?P<sev>fatal error|runtime error|[A-Za-z]+): (?P<msg>.*)$",
    )
    .unwrap()
});

static SANITIZER_HEADLINE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^==\d+==\s*ERROR: (?P<san>\w+Sanitizer): (?P<reason>[-\w]+)(?P<rest>.*)$").unwrap()
});

static SANITIZER_FRAME: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^\s*#(?P<num>\d+) 0x[0-9a-fA-F]+ in (?P<func>\S+) (?P<loc>\S+?)(?::(?P<line>\d+))?(?::(?P<col>\d+))?$")
        .unwrap()
});

static SANITIZER_SUMMARY: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^SUMMARY: (?P<san>\w+Sanitizer): (?P<reason>\S+) (?P<file>[^:\s]+):(?P<line>\d+)(?::\d+)?(?: in (?P<func>\S+))?")
        .unwrap()
});

const DUMP_BEGIN: &str = "SIDEKICK_FRAMES_BEGIN";
const DUMP_END: &str = "SIDEKICK_FRAMES_END";

/// Splits compiler stderr into diagnostics.
///
/// Lines of the form `file:line[:col]: severity: message` start a new
/// diagnostic; anything else is appended to the raw text of the preceding one
/// (or dropped if none exists yet).
pub fn parse_compile_diagnostics(raw_stderr: &str) -> Vec<Diagnostic> {
    let mut out: Vec<Diagnostic> = Vec::new();
    for line in raw_stderr.lines() {
        match parse_diagnostic_line(line) {
            Some(d) => out.push(d),
            None => {
                if let Some(last) = out.last_mut() {
                    if !line.trim().is_empty() {
                        last.raw.push('\n');
                        last.raw.push_str(line);
                    }
                }
            }
        }
    }
    out
}

fn parse_diagnostic_line(line: &str) -> Option<Diagnostic> {
    let caps = DIAGNOSTIC_LINE.captures(line)?;
    let line_no: u32 = caps["line"].parse().ok().filter(|&n| n >= 1)?;
    let column = caps
        .name("col")
        .and_then(|c| c.as_str().parse().ok())
        .unwrap_or(0);
    let sev = &caps["sev"];
    let message = if sev == "runtime error" {
        format!("runtime error: {}", &caps["msg"])
    } else {
        caps["msg"].to_string()
    };
    Some(Diagnostic {
        file: caps["file"].to_string(),
        line: line_no,
        column,
        severity: Severity::from_word(sev),
        message,
        raw: line.to_string(),
    })
}

/// What a sanitizer printed when the program died.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SanitizerReport {
    pub sanitizer: String,
    pub reason: String,
    pub headline: String,
    /// Every frame with a resolved function name, innermost first.
    pub frames: Vec<StackFrame>,
    pub summary_location: Option<(String, u32)>,
    /// The report text from the headline on, without the shadow memory dump.
    pub body: String,
    /// UBSan `runtime error` lines seen anywhere in the output.
    pub runtime_errors: Vec<Diagnostic>,
}

impl SanitizerReport {
    /// Short label for the failure: the signal name for SEGV-style reports,
    /// otherwise `Sanitizer: reason`.
    pub fn signal_label(&self) -> String {
        match self.reason.as_str() {
            "SEGV" => "SIGSEGV".to_string(),
            "BUS" => "SIGBUS".to_string(),
            "FPE" => "SIGFPE".to_string(),
            "ILL" => "SIGILL".to_string(),
            "undefined-behavior" => format!(
                "{}: {}",
                self.sanitizer,
                self.headline.trim_start_matches("runtime error: ")
            ),
            reason => format!("{}: {}", self.sanitizer, reason),
        }
    }
}

/// Extracts the last sanitizer report from a program's stderr.
///
/// UBSan reports aborted with `-fno-sanitize-recover` have no `==pid==`
/// headline; they are recognized by their `runtime error` line.
pub fn parse_sanitizer_report(stderr: &str) -> Option<SanitizerReport> {
    let lines: Vec<&str> = stderr.lines().collect();
    let runtime_errors: Vec<Diagnostic> = lines
        .iter()
        .filter_map(|l| parse_diagnostic_line(l))
        .filter(|d| d.message.starts_with("runtime error:"))
        .collect();

    let headline_idx = lines.iter().rposition(|l| SANITIZER_HEADLINE.is_match(l));
    let summary_idx = lines.iter().rposition(|l| l.starts_with("SUMMARY: "));

    let (sanitizer, reason, headline, start) = match headline_idx {
        Some(i) => {
            let caps = SANITIZER_HEADLINE.captures(lines[i]).unwrap();
            let headline = format!("{}: {}{}", &caps["san"], &caps["reason"], &caps["rest"]);
            (caps["san"].to_string(), caps["reason"].to_string(), headline, i)
        }
        None => {
            let first = runtime_errors.first()?;
            let start = lines.iter().position(|l| *l == first.raw).unwrap_or(0);
            (
                "UndefinedBehaviorSanitizer".to_string(),
                "undefined-behavior".to_string(),
                first.message.clone(),
                start,
            )
        }
    };

    let end = lines[start..]
        .iter()
        .position(|l| l.contains("==ABORTING"))
        .map(|p| start + p)
        .unwrap_or(lines.len().saturating_sub(1));
    // the shadow memory dump is noise for a student
    let body_end = lines[start..=end.max(start)]
        .iter()
        .position(|l| l.starts_with("Shadow bytes around"))
        .map(|p| (start + p).saturating_sub(1))
        .unwrap_or(end);
    let body = lines[start..=body_end.max(start)].join("\n").trim_end().to_string();

    // Only the first stack in the report belongs to the faulting access;
    // later stacks describe allocation or free sites.
    let mut frames = Vec::new();
    let mut in_stack = false;
    for l in &lines[start..=end.max(start)] {
        if let Some(caps) = SANITIZER_FRAME.captures(l) {
            in_stack = true;
            let func = caps["func"].to_string();
            let loc = caps["loc"].to_string();
            let line_no = caps.name("line").and_then(|m| m.as_str().parse::<u32>().ok());
            if let Some(line_no) = line_no.filter(|&n| n >= 1) {
                frames.push(StackFrame {
                    function_name: func,
                    file: loc,
                    line: line_no,
                    locals: Vec::new(),
                });
            }
        } else if in_stack {
            break;
        }
    }

    let summary_location = summary_idx.and_then(|i| {
        SANITIZER_SUMMARY
            .captures(lines[i])
            .and_then(|c| Some((c["file"].to_string(), c["line"].parse().ok()?)))
    });

    Some(SanitizerReport {
        sanitizer,
        reason,
        headline,
        frames,
        summary_location,
        body,
        runtime_errors,
    })
}

#[derive(Deserialize)]
struct DumpFrame {
    function: String,
    file: String,
    line: u32,
    #[serde(default)]
    locals: Vec<VariableBinding>,
}

/// Parses the JSON frame dump emitted by the debugger helper script.
/// Frames without a function name or line are skipped.
pub fn parse_frame_dump(debugger_stdout: &str) -> Option<Vec<StackFrame>> {
    let start = debugger_stdout.find(DUMP_BEGIN)? + DUMP_BEGIN.len();
    let end = debugger_stdout[start..].find(DUMP_END)? + start;
    let frames: Vec<DumpFrame> = serde_json::from_str(debugger_stdout[start..end].trim()).ok()?;
    Some(
        frames
            .into_iter()
            .filter(|f| !f.function.is_empty() && f.line >= 1)
            .map(|f| StackFrame {
                function_name: f.function,
                file: f.file,
                line: f.line,
                locals: f.locals.into_iter().filter(|v| !v.name.is_empty()).collect(),
            })
            .collect(),
    )
}
