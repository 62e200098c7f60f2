use std::collections::BTreeSet;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sidekick_core::capture::{Diagnostic, ErrorContext, ErrorKind, SourceFile, StackFrame};
use sidekick_core::{Turn, TurnRole};

#[derive(Clone, Debug, PartialEq)]
pub struct Session {
    pub token: String,
    pub owner_id: String,
    pub context: ErrorContext,
    pub turns: Vec<Turn>,
    pub visited: bool,
    pub share_tokens: BTreeSet<String>,
    pub created_at: DateTime<Utc>,
}

impl Session {
    /// Turns start with an assistant turn and alternate from there. A
    /// trailing user turn is allowed: its reply failed and awaits a retry.
    pub fn turns_alternate(&self) -> bool {
        self.turns.iter().enumerate().all(|(i, t)| {
            let expected = if i % 2 == 0 { TurnRole::Assistant } else { TurnRole::User };
            t.role == expected && t.is_well_formed()
        })
    }

    /// Waiting for an explanation or reply that failed to generate.
    pub fn pending(&self) -> bool {
        (self.visited && self.turns.is_empty()) || self.turns.last().is_some_and(|t| t.role == TurnRole::User)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TurnView {
    pub role: TurnRole,
    pub text: String,
    pub created_at: DateTime<Utc>,
}

impl From<&Turn> for TurnView {
    fn from(t: &Turn) -> Self {
        Self { role: t.role, text: t.text.clone(), created_at: t.created_at }
    }
}

/// What the dashboard gets for a token. The model's unfiltered text and the
/// owner id are never included.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub kind: ErrorKind,
    pub created_at: DateTime<Utc>,
    pub source_files: Vec<SourceFile>,
    pub diagnostics: Vec<Diagnostic>,
    pub runtime_signal: Option<String>,
    pub stack: Vec<StackFrame>,
    pub stdin_excerpt: Option<String>,
    pub turns: Vec<TurnView>,
    pub can_post: bool,
    pub overuse_warning: bool,
    /// The last generation failed; `POST .../retry` will try again.
    pub explanation_pending: bool,
}

impl SessionView {
    pub fn new(s: &Session, can_post: bool, overuse_warning: bool) -> Self {
        let ctx = &s.context;
        Self {
            kind: ctx.kind,
            created_at: s.created_at,
            source_files: ctx.source_files.clone(),
            diagnostics: ctx.diagnostics.clone(),
            runtime_signal: ctx.runtime_signal.clone(),
            stack: ctx.stack.clone(),
            stdin_excerpt: ctx.stdin_excerpt.clone(),
            turns: s.turns.iter().map(TurnView::from).collect(),
            can_post,
            overuse_warning,
            explanation_pending: s.pending(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OveruseStatus {
    pub warn: bool,
    pub recent_session_count: usize,
    pub window_minutes: u32,
}
