use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::CaptureError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    CompileTime,
    RunTime,
}

impl ErrorKind {
    pub fn label(self) -> &'static str {
        match self {
            ErrorKind::CompileTime => "compile-time",
            ErrorKind::RunTime => "run-time",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
    Note,
}

impl Severity {
    /// Maps a compiler severity word onto the three known levels.
    /// Anything unrecognized is a note.
    pub fn from_word(word: &str) -> Self {
        match word.trim().to_ascii_lowercase().as_str() {
            "error" | "fatal error" | "runtime error" => Severity::Error,
            "warning" => Severity::Warning,
            _ => Severity::Note,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
            Severity::Note => "note",
        }
    }
}

/// One compiler (or sanitizer) message anchored to a source position.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub file: String,
    pub line: u32,
    /// Zero when the tool did not report a column.
    pub column: u32,
    pub severity: Severity,
    pub message: String,
    /// The original output, including any continuation lines.
    pub raw: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableBinding {
    pub name: String,
    pub type_name: String,
    pub value_repr: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StackFrame {
    pub function_name: String,
    pub file: String,
    pub line: u32,
    #[serde(default)]
    pub locals: Vec<VariableBinding>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceFile {
    pub path: String,
    pub text: String,
}

/// Snapshot of a single compile-time or run-time failure.
///
/// The serialized form of this struct is the cache file format; field order
/// and names are part of the external interface.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorContext {
    pub kind: ErrorKind,
    pub created_at: DateTime<Utc>,
    pub source_files: Vec<SourceFile>,
    pub compiler_invocation: String,
    pub diagnostics: Vec<Diagnostic>,
    pub runtime_signal: Option<String>,
    pub stack: Vec<StackFrame>,
    pub stdin_excerpt: Option<String>,
    pub exit_status: i32,
}

impl ErrorContext {
    pub fn validate(&self) -> Result<(), CaptureError> {
        let invalid = |msg: &str| Err(CaptureError::InvalidContext(msg.to_string()));
        if self.source_files.is_empty() {
            return invalid("source_files must not be empty");
        }
        match self.kind {
            ErrorKind::CompileTime => {
                if !self.stack.is_empty() {
                    return invalid("compile-time context must not carry a stack");
                }
                if self.diagnostics.is_empty() {
                    return invalid("compile-time context needs at least one diagnostic");
                }
            }
            ErrorKind::RunTime => {
                if self.runtime_signal.is_none() {
                    return invalid("run-time context needs a runtime_signal");
                }
            }
        }
        for d in &self.diagnostics {
            if d.line == 0 {
                return invalid("diagnostic line must be >= 1");
            }
            if d.raw.is_empty() {
                return invalid("diagnostic raw text must not be empty");
            }
        }
        for frame in &self.stack {
            if frame.function_name.is_empty() {
                return invalid("stack frame function_name must not be empty");
            }
            if frame.line == 0 {
                return invalid("stack frame line must be >= 1");
            }
            if frame.locals.iter().any(|v| v.name.is_empty()) {
                return invalid("local variable name must not be empty");
            }
        }
        Ok(())
    }

    /// Line of the first error in `path`, falling back to the innermost stack
    /// frame that lives in that file.
    pub fn first_error_line(&self, path: &str) -> Option<u32> {
        let same = |f: &str| f == path || path.ends_with(f) || f.ends_with(path);
        let mut in_file = self.diagnostics.iter().filter(|d| same(&d.file));
        let first = in_file.clone().next();
        in_file
            .find(|d| d.severity == Severity::Error)
            .or(first)
            .map(|d| d.line)
            .or_else(|| self.stack.iter().find(|f| same(&f.file)).map(|f| f.line))
    }
}
