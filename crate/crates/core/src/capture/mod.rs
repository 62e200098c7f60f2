//! Capturing compile-time and run-time failures from a C toolchain.

mod cache;
mod compile;
mod parse;
mod run;
mod types;

use std::path::PathBuf;

pub use cache::{cache_context, default_cache_dir, load_context, CACHE_FILE_NAME};
pub use compile::{split_sources, wrap_compile, CompileOutcome, CompileReport, LAUNCH_HINT, SANITIZER_FLAGS};
pub use parse::{parse_compile_diagnostics, parse_frame_dump, parse_sanitizer_report, SanitizerReport};
pub use run::{run_with_capture, RunOutcome, RunReport};
pub use types::{Diagnostic, ErrorContext, ErrorKind, Severity, SourceFile, StackFrame, VariableBinding};

#[derive(Debug, thiserror::Error)]
pub enum CaptureError {
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("cannot read {path}: {source}")]
    Source {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid error context: {0}")]
    InvalidContext(String),
    #[error("cache file is corrupt: {0}")]
    Corrupt(#[from] serde_json::Error),
}

/// Where the wrapper finds its tools and where it caches the last error.
#[derive(Clone, Debug)]
pub struct CaptureConfig {
    pub compiler: String,
    /// Add debug info and sanitizer instrumentation to every compile.
    pub sanitize: bool,
    pub cache_dir: PathBuf,
    /// Debugger used to recover local variables after a crash; `None` disables it.
    pub debugger: Option<String>,
    /// Forward the child's output to our own stdout/stderr as it arrives.
    pub passthrough: bool,
}

impl CaptureConfig {
    pub fn new(cache_dir: impl Into<PathBuf>) -> Self {
        Self {
            compiler: "gcc".to_string(),
            sanitize: true,
            cache_dir: cache_dir.into(),
            debugger: Some("gdb".to_string()),
            passthrough: false,
        }
    }

    /// Reads `SIDEKICK_CC`, `SIDEKICK_SANITIZE`, `SIDEKICK_DEBUGGER` and
    /// `SIDEKICK_CACHE_DIR`.
    pub fn from_env() -> Result<Self, CaptureError> {
        let mut cfg = Self::new(default_cache_dir()?);
        if let Ok(cc) = std::env::var("SIDEKICK_CC") {
            if !cc.trim().is_empty() {
                cfg.compiler = cc;
            }
        }
        if let Ok(v) = std::env::var("SIDEKICK_SANITIZE") {
            cfg.sanitize = !matches!(v.as_str(), "0" | "false" | "no");
        }
        if let Ok(v) = std::env::var("SIDEKICK_DEBUGGER") {
            cfg.debugger = match v.as_str() {
                "" | "0" | "none" => None,
                other => Some(other.to_string()),
            };
        }
        cfg.passthrough = true;
        Ok(cfg)
    }
}
