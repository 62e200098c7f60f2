use std::collections::VecDeque;
use std::path::Path;
use std::sync::Mutex;

use async_trait::async_trait;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use super::{BackendError, ChatBackend, CompletionRequest, CompletionResult};

/// One scripted reaction of the mock.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MockReply {
    Text(String),
    Fail(String),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ScriptLine {
    Text(String),
    Object {
        #[serde(default)]
        text: Option<String>,
        #[serde(default)]
        error: Option<String>,
    },
}

type Responder = Box<dyn Fn(&CompletionRequest) -> MockReply + Send + Sync>;

enum Mode {
    Script(Mutex<VecDeque<MockReply>>),
    Responder(Responder),
}

/// Deterministic offline backend.
///
/// Either replays a FIFO script or computes each reply from the request.
/// Every request it receives is recorded for inspection.
pub struct MockBackend {
    mode: Mode,
    received: Mutex<Vec<CompletionRequest>>,
}

impl MockBackend {
    pub fn scripted<I, S>(replies: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::from_replies(replies.into_iter().map(|s| MockReply::Text(s.into())))
    }

    pub fn from_replies(replies: impl IntoIterator<Item = MockReply>) -> Self {
        Self::with_mode(Mode::Script(Mutex::new(replies.into_iter().collect())))
    }

    pub fn from_fn(f: impl Fn(&CompletionRequest) -> MockReply + Send + Sync + 'static) -> Self {
        Self::with_mode(Mode::Responder(Box::new(f)))
    }

    /// Reply text depends only on a hash of the request, so identical
    /// requests always get identical answers.
    pub fn canned() -> Self {
        Self::from_fn(|req| {
            let mut hasher = Sha256::new();
            for m in &req.messages {
                hasher.update(m.content.as_bytes());
                hasher.update([0]);
            }
            let digest = hasher.finalize();
            MockReply::Text(format!(
                "Let's look at this error together. Start with the line the error points at and check what each value is there. (mock reply {:02x}{:02x}{:02x}{:02x})",
                digest[0], digest[1], digest[2], digest[3]
            ))
        })
    }

    /// Loads a script of newline-delimited JSON values. Each line is either a
    /// string (the reply text), `{"text": ...}`, or `{"error": ...}`.
    pub fn from_ndjson(script: &str) -> Result<Self, BackendError> {
        let mut replies = Vec::new();
        for (i, line) in script.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parsed: ScriptLine = serde_json::from_str(line)
                .map_err(|e| BackendError::Config(format!("mock script line {}: {e}", i + 1)))?;
            replies.push(match parsed {
                ScriptLine::Text(t) => MockReply::Text(t),
                ScriptLine::Object { error: Some(e), .. } => MockReply::Fail(e),
                ScriptLine::Object { text: Some(t), .. } => MockReply::Text(t),
                ScriptLine::Object { .. } => {
                    return Err(BackendError::Config(format!("mock script line {}: needs text or error", i + 1)))
                }
            });
        }
        Ok(Self::from_replies(replies))
    }

    pub fn from_ndjson_file(path: impl AsRef<Path>) -> Result<Self, BackendError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| BackendError::Config(format!("cannot read mock script {}: {e}", path.as_ref().display())))?;
        Self::from_ndjson(&text)
    }

    fn with_mode(mode: Mode) -> Self {
        Self { mode, received: Mutex::new(Vec::new()) }
    }

    pub fn received(&self) -> Vec<CompletionRequest> {
        self.received.lock().unwrap().clone()
    }

    pub fn call_count(&self) -> usize {
        self.received.lock().unwrap().len()
    }

    pub fn remaining(&self) -> Option<usize> {
        match &self.mode {
            Mode::Script(q) => Some(q.lock().unwrap().len()),
            Mode::Responder(_) => None,
        }
    }
}

#[async_trait]
impl ChatBackend for MockBackend {
    async fn chat(&self, req: &CompletionRequest) -> Result<CompletionResult, BackendError> {
        req.validate()?;
        self.received.lock().unwrap().push(req.clone());
        let reply = match &self.mode {
            Mode::Script(queue) => queue.lock().unwrap().pop_front().ok_or(BackendError::ScriptExhausted)?,
            Mode::Responder(f) => f(req),
        };
        match reply {
            MockReply::Text(text) => Ok(CompletionResult { text, backend_latency_ms: 0, token_counts: None }),
            MockReply::Fail(reason) => Err(BackendError::Scripted(reason)),
        }
    }
}
