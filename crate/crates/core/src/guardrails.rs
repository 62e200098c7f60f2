//! Keeps code blocks out of assistant replies.
//!
//! Every candidate reply goes through [`apply_guardrails`]. Replies with a
//! fenced code block are sent back to the model once with
//! [`REWRITE_SYSTEM_PROMPT`]; if the rewrite still has a block (or the
//! backend fails), fenced regions are removed mechanically.

use serde::{Deserialize, Serialize};

use crate::llm::{BackendError, ChatBackend, GenerationParams};
use crate::prompt::{PromptMessage, Role};

pub const REWRITE_SYSTEM_PROMPT: &str = include_str!("../prompts/rewrite.txt");

pub const CODE_OMITTED: &str = "[code omitted — explained above]";

const FENCE: &str = "```";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuardrailOutcome {
    pub code_block_detected: bool,
    pub rewritten: bool,
    pub fallback_stripped: bool,
    /// The model's first answer. Kept for the logs, never shown to students.
    pub original_text: String,
}

impl GuardrailOutcome {
    pub fn clean(original: impl Into<String>) -> Self {
        Self { code_block_detected: false, rewritten: false, fallback_stripped: false, original_text: original.into() }
    }

    pub fn is_consistent(&self) -> bool {
        (!self.rewritten || self.code_block_detected) && (!self.fallback_stripped || self.rewritten)
    }
}

/// True when `text` holds at least one pair of triple-backtick fences.
pub fn contains_code_block(text: &str) -> bool {
    text.match_indices(FENCE).nth(1).is_some()
}

/// Replaces every fenced region (opening fence through closing fence) with
/// [`CODE_OMITTED`]. An unpaired trailing fence is left alone.
pub fn strip_code_blocks(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(open) = rest.find(FENCE) {
        let after_open = &rest[open + FENCE.len()..];
        let Some(close) = after_open.find(FENCE) else { break };
        out.push_str(&rest[..open]);
        out.push_str(CODE_OMITTED);
        rest = &after_open[close + FENCE.len()..];
    }
    out.push_str(rest);
    out
}

/// Asks the backend to restate `text` without code blocks.
pub async fn rewrite_response(
    text: &str,
    backend: &dyn ChatBackend,
    params: &GenerationParams,
) -> Result<String, BackendError> {
    let req = params.request(vec![
        PromptMessage::new(Role::System, REWRITE_SYSTEM_PROMPT),
        PromptMessage::new(Role::User, text),
    ]);
    Ok(backend.chat(&req).await?.text)
}

/// Returns the text to show the student and a record of what happened to it.
///
/// The returned text never contains a fenced code block, whatever the
/// backend does. Clean candidates come back byte-for-byte unchanged.
pub async fn apply_guardrails(
    candidate: &str,
    backend: &dyn ChatBackend,
    params: &GenerationParams,
) -> (String, GuardrailOutcome) {
    if !contains_code_block(candidate) {
        return (candidate.to_string(), GuardrailOutcome::clean(candidate));
    }
    let mut outcome = GuardrailOutcome {
        code_block_detected: true,
        rewritten: true,
        fallback_stripped: false,
        original_text: candidate.to_string(),
    };
    let text = match rewrite_response(candidate, backend, params).await {
        Ok(rewrite) if !contains_code_block(&rewrite) => rewrite,
        Ok(rewrite) => {
            outcome.fallback_stripped = true;
            strip_code_blocks(&rewrite)
        }
        Err(e) => {
            tracing::warn!(error = %e, "rewrite failed, stripping code blocks");
            outcome.fallback_stripped = true;
            strip_code_blocks(candidate)
        }
    };
    (text, outcome)
}
