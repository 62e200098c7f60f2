//! Chat-completion backends.

mod mock;
mod openai;

use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};

pub use mock::{MockBackend, MockReply};
pub use openai::{OpenAiCompatible, RetryPolicy};

use crate::prompt::{PromptMessage, Role};

pub const DEFAULT_TEMPERATURE: f32 = 0.7;
pub const DEFAULT_MAX_OUTPUT_TOKENS: u32 = 512;
pub const DEFAULT_MODEL_ID: &str = "gpt-3.5-turbo";
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

/// Decoding parameters shared by every request a deployment makes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationParams {
    pub temperature: f32,
    pub max_output_tokens: u32,
    pub model_id: String,
}

impl Default for GenerationParams {
    fn default() -> Self {
        Self {
            temperature: DEFAULT_TEMPERATURE,
            max_output_tokens: DEFAULT_MAX_OUTPUT_TOKENS,
            model_id: DEFAULT_MODEL_ID.to_string(),
        }
    }
}

impl GenerationParams {
    /// Defaults overridden by `SIDEKICK_MODEL_ID`, `SIDEKICK_TEMPERATURE`
    /// and `SIDEKICK_MAX_OUTPUT_TOKENS`.
    pub fn from_env() -> Self {
        let mut p = Self::default();
        if let Ok(m) = std::env::var("SIDEKICK_MODEL_ID") {
            if !m.is_empty() {
                p.model_id = m;
            }
        }
        if let Some(t) = std::env::var("SIDEKICK_TEMPERATURE").ok().and_then(|v| v.parse().ok()) {
            p.temperature = t;
        }
        if let Some(n) = std::env::var("SIDEKICK_MAX_OUTPUT_TOKENS").ok().and_then(|v| v.parse().ok()) {
            p.max_output_tokens = n;
        }
        p
    }

    pub fn request(&self, messages: Vec<PromptMessage>) -> CompletionRequest {
        CompletionRequest {
            messages,
            temperature: self.temperature,
            max_output_tokens: self.max_output_tokens,
            model_id: self.model_id.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub messages: Vec<PromptMessage>,
    pub temperature: f32,
    pub max_output_tokens: u32,
    pub model_id: String,
}

impl CompletionRequest {
    pub fn validate(&self) -> Result<(), BackendError> {
        let invalid = |m: &str| Err(BackendError::InvalidRequest(m.to_string()));
        match self.messages.first() {
            None => return invalid("messages must not be empty"),
            Some(m) if m.role != Role::System => return invalid("first message must be the system prompt"),
            _ => {}
        }
        if self.messages.iter().any(|m| m.content.is_empty()) {
            return invalid("message content must not be empty");
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return invalid("temperature must be within [0, 2]");
        }
        if self.max_output_tokens == 0 {
            return invalid("max_output_tokens must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenCounts {
    pub prompt: u32,
    pub completion: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionResult {
    pub text: String,
    pub backend_latency_ms: u64,
    pub token_counts: Option<TokenCounts>,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum BackendError {
    #[error("invalid completion request: {0}")]
    InvalidRequest(String),
    #[error("backend timed out after {0:?}")]
    Timeout(Duration),
    #[error("backend returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed backend response: {0}")]
    Malformed(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("mock script exhausted")]
    ScriptExhausted,
    #[error("scripted failure: {0}")]
    Scripted(String),
    #[error("backend misconfigured: {0}")]
    Config(String),
}

impl BackendError {
    /// Failures worth another attempt.
    pub fn is_transient(&self) -> bool {
        match self {
            BackendError::Timeout(_) | BackendError::Transport(_) => true,
            BackendError::Status { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

#[async_trait]
pub trait ChatBackend: Send + Sync {
    async fn chat(&self, req: &CompletionRequest) -> Result<CompletionResult, BackendError>;
}

#[async_trait]
impl<T: ChatBackend + ?Sized> ChatBackend for Arc<T> {
    async fn chat(&self, req: &CompletionRequest) -> Result<CompletionResult, BackendError> {
        (**self).chat(req).await
    }
}

/// Builds the backend named by `SIDEKICK_LLM_BACKEND` (`mock` or
/// `openai-compatible`).
///
/// The mock reads its script from `SIDEKICK_MOCK_SCRIPT` when set and falls
/// back to a canned deterministic reply otherwise.
pub fn backend_from_env() -> Result<Arc<dyn ChatBackend>, BackendError> {
    let kind = std::env::var("SIDEKICK_LLM_BACKEND").unwrap_or_else(|_| "mock".to_string());
    match kind.as_str() {
        "mock" => match std::env::var_os("SIDEKICK_MOCK_SCRIPT") {
            Some(path) => Ok(Arc::new(MockBackend::from_ndjson_file(path)?)),
            None => Ok(Arc::new(MockBackend::canned())),
        },
        "openai-compatible" | "openai" => {
            let endpoint = std::env::var("SIDEKICK_LLM_ENDPOINT")
                .unwrap_or_else(|_| "https://api.openai.com/v1/chat/completions".to_string());
            let api_key = std::env::var("SIDEKICK_LLM_API_KEY").ok();
            Ok(Arc::new(OpenAiCompatible::new(endpoint, api_key)?))
        }
        other => Err(BackendError::Config(format!("unknown SIDEKICK_LLM_BACKEND `{other}`"))),
    }
}
