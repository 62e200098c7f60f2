use std::net::SocketAddr;
use std::path::PathBuf;

use sidekick_core::telemetry::StaffList;
use sidekick_core::{GenerationParams, PromptBuilder};

use crate::service::{ServiceConfig, DEFAULT_OVERUSE_THRESHOLD, DEFAULT_OVERUSE_WINDOW_MIN};

/// Everything the server reads from its environment.
#[derive(Clone, Debug)]
pub struct ServerConfig {
    pub db_path: PathBuf,
    pub bind: SocketAddr,
    pub staff: StaffList,
    pub service: ServiceConfig,
}

#[derive(Debug, thiserror::Error)]
#[error("{var}: {message}")]
pub struct ConfigError {
    pub var: &'static str,
    pub message: String,
}

fn var(name: &str) -> Option<String> {
    std::env::var(name).ok().filter(|v| !v.trim().is_empty())
}

fn parsed<T: std::str::FromStr>(name: &'static str, default: T) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    match var(name) {
        None => Ok(default),
        Some(v) => v.trim().parse().map_err(|e: T::Err| ConfigError { var: name, message: e.to_string() }),
    }
}

impl ServerConfig {
    /// Reads `SIDEKICK_DB_PATH`, `SIDEKICK_BIND`, `SIDEKICK_PUBLIC_URL`,
    /// `SIDEKICK_OVERUSE_THRESHOLD`, `SIDEKICK_OVERUSE_WINDOW_MIN`,
    /// `SIDEKICK_STAFF_IDS` (path to a staff id file) and
    /// `SIDEKICK_PROMPT_DIR`, plus the generation parameters.
    pub fn from_env() -> Result<Self, ConfigError> {
        let bind: SocketAddr = parsed("SIDEKICK_BIND", SocketAddr::from(([127, 0, 0, 1], 8080)))?;
        let staff = match var("SIDEKICK_STAFF_IDS") {
            None => StaffList::default(),
            Some(path) => StaffList::load(path.as_ref())
                .map_err(|e| ConfigError { var: "SIDEKICK_STAFF_IDS", message: format!("{path}: {e}") })?,
        };
        let prompts = match var("SIDEKICK_PROMPT_DIR") {
            None => PromptBuilder::default(),
            Some(dir) => PromptBuilder::from_prompt_dir(dir.as_ref())
                .map_err(|e| ConfigError { var: "SIDEKICK_PROMPT_DIR", message: e.to_string() })?,
        };
        let public_url = var("SIDEKICK_PUBLIC_URL").unwrap_or_else(|| format!("http://{bind}"));
        Ok(Self {
            db_path: var("SIDEKICK_DB_PATH").unwrap_or_else(|| "sidekick.db".into()).into(),
            bind,
            staff,
            service: ServiceConfig {
                params: GenerationParams::from_env(),
                prompts,
                overuse_threshold: parsed("SIDEKICK_OVERUSE_THRESHOLD", DEFAULT_OVERUSE_THRESHOLD)?,
                overuse_window_min: parsed("SIDEKICK_OVERUSE_WINDOW_MIN", DEFAULT_OVERUSE_WINDOW_MIN)?,
                public_url: public_url.trim_end_matches('/').to_string(),
            },
        })
    }
}
