use std::time::{Duration, Instant};

use async_trait::async_trait;
use serde::{Deserialize, Serialize};

use super::{BackendError, ChatBackend, CompletionRequest, CompletionResult, TokenCounts, DEFAULT_TIMEOUT};
use crate::prompt::PromptMessage;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RetryPolicy {
    /// Retries after the first attempt.
    pub max_retries: u32,
    pub initial_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max_retries: 2, initial_backoff: Duration::from_millis(500) }
    }
}

impl RetryPolicy {
    fn backoff(&self, retry: u32) -> Duration {
        self.initial_backoff * 2u32.saturating_pow(retry)
    }
}

/// Adapter for any endpoint speaking the chat-completions wire format.
pub struct OpenAiCompatible {
    client: reqwest::Client,
    endpoint: String,
    api_key: Option<String>,
    timeout: Duration,
    retry: RetryPolicy,
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    messages: &'a [PromptMessage],
    temperature: f32,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
    #[serde(default)]
    usage: Option<WireUsage>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireMessage,
}

#[derive(Deserialize)]
struct WireMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Deserialize)]
struct WireUsage {
    prompt_tokens: u32,
    completion_tokens: u32,
}

impl OpenAiCompatible {
    pub fn new(endpoint: impl Into<String>, api_key: Option<String>) -> Result<Self, BackendError> {
        Self::with_options(endpoint, api_key, DEFAULT_TIMEOUT, RetryPolicy::default())
    }

    pub fn with_options(
        endpoint: impl Into<String>,
        api_key: Option<String>,
        timeout: Duration,
        retry: RetryPolicy,
    ) -> Result<Self, BackendError> {
        let client = reqwest::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| BackendError::Config(e.to_string()))?;
        Ok(Self { client, endpoint: endpoint.into(), api_key, timeout, retry })
    }

    async fn attempt(&self, req: &CompletionRequest) -> Result<CompletionResult, BackendError> {
        let body = WireRequest {
            model: &req.model_id,
            messages: &req.messages,
            temperature: req.temperature,
            max_tokens: req.max_output_tokens,
        };
        let started = Instant::now();
        let mut http = self.client.post(&self.endpoint).json(&body);
        if let Some(key) = &self.api_key {
            http = http.bearer_auth(key);
        }
        let resp = http.send().await.map_err(|e| self.classify(e))?;
        let status = resp.status();
        let text = resp.text().await.map_err(|e| self.classify(e))?;
        if !status.is_success() {
            return Err(BackendError::Status { status: status.as_u16(), body: text });
        }
        let parsed: WireResponse = serde_json::from_str(&text).map_err(|e| BackendError::Malformed(e.to_string()))?;
        let content = parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| BackendError::Malformed("response has no choices[0].message.content".into()))?;
        Ok(CompletionResult {
            text: content,
            backend_latency_ms: started.elapsed().as_millis() as u64,
            token_counts: parsed
                .usage
                .map(|u| TokenCounts { prompt: u.prompt_tokens, completion: u.completion_tokens }),
        })
    }

    fn classify(&self, e: reqwest::Error) -> BackendError {
        if e.is_timeout() {
            BackendError::Timeout(self.timeout)
        } else {
            BackendError::Transport(e.to_string())
        }
    }
}

#[async_trait]
impl ChatBackend for OpenAiCompatible {
    async fn chat(&self, req: &CompletionRequest) -> Result<CompletionResult, BackendError> {
        req.validate()?;
        let mut retry = 0;
        loop {
            match self.attempt(req).await {
                Err(e) if e.is_transient() && retry < self.retry.max_retries => {
                    tracing::warn!(error = %e, retry, "transient backend failure, retrying");
                    tokio::time::sleep(self.retry.backoff(retry)).await;
                    retry += 1;
                }
                other => return other,
            }
        }
    }
}
