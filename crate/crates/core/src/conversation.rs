use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::guardrails::GuardrailOutcome;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TurnRole {
    Assistant,
    User,
}

/// One message in a session. Assistant turns always carry the outcome of
/// the guardrail pass that produced their text.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub role: TurnRole,
    pub text: String,
    pub guardrail: Option<GuardrailOutcome>,
    pub created_at: DateTime<Utc>,
}

impl Turn {
    pub fn user(text: impl Into<String>, created_at: DateTime<Utc>) -> Self {
        Self { role: TurnRole::User, text: text.into(), guardrail: None, created_at }
    }

    pub fn assistant(text: impl Into<String>, outcome: GuardrailOutcome, created_at: DateTime<Utc>) -> Self {
        Self { role: TurnRole::Assistant, text: text.into(), guardrail: Some(outcome), created_at }
    }

    pub fn is_well_formed(&self) -> bool {
        (self.role == TurnRole::Assistant) == self.guardrail.is_some()
    }
}
