//! Session operations. Mutations of one session are serialized by a
//! per-token async mutex; the store is the only shared state.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;
use chrono::{DateTime, Duration, Utc};
use sidekick_core::capture::ErrorContext;
use sidekick_core::guardrails::apply_guardrails;
use sidekick_core::telemetry::{EventSink, EventType, UsageEvent};
use sidekick_core::{ChatBackend, GenerationParams, PromptBuilder, PromptMessage, Turn, TurnRole};

use crate::session::{OveruseStatus, Session, SessionView};
use crate::store::{Access, Store, StoreError};

pub const OVERUSE_REMINDER: &str = "You have started a lot of help sessions in a short time. \
Try the next step on your own before asking again: AI assistance will not be available in the final exam.";

pub const DEFAULT_OVERUSE_THRESHOLD: usize = 6;
pub const DEFAULT_OVERUSE_WINDOW_MIN: u32 = 10;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("no session for this token")]
    NotFound,
    #[error("{0}")]
    Forbidden(&'static str),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Conflict(String),
    /// Generation failed; the request can be retried.
    #[error("the assistant is unavailable right now: {0}")]
    Backend(String),
    #[error("storage failure: {0}")]
    Storage(#[from] StoreError),
}

pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// A clock tests can move by hand.
pub struct ManualClock(Mutex<DateTime<Utc>>);

impl ManualClock {
    pub fn new(start: DateTime<Utc>) -> Self {
        Self(Mutex::new(start))
    }

    pub fn advance(&self, by: Duration) {
        *self.0.lock().unwrap() += by;
    }
}

impl Clock for ManualClock {
    fn now(&self) -> DateTime<Utc> {
        *self.0.lock().unwrap()
    }
}

#[derive(Clone, Debug)]
pub struct ServiceConfig {
    pub params: GenerationParams,
    pub prompts: PromptBuilder,
    pub overuse_threshold: usize,
    pub overuse_window_min: u32,
    /// Base URL of the dashboard, without a trailing slash.
    pub public_url: String,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            params: GenerationParams::default(),
            prompts: PromptBuilder::default(),
            overuse_threshold: DEFAULT_OVERUSE_THRESHOLD,
            overuse_window_min: DEFAULT_OVERUSE_WINDOW_MIN,
            public_url: "http://127.0.0.1:8080".into(),
        }
    }
}

pub struct SessionService {
    store: Arc<Store>,
    backend: Arc<dyn ChatBackend>,
    clock: Arc<dyn Clock>,
    config: ServiceConfig,
    locks: Mutex<HashMap<String, Arc<tokio::sync::Mutex<()>>>>,
}

/// 256 random bits, URL-safe.
pub fn new_token() -> String {
    URL_SAFE_NO_PAD.encode(rand::random::<[u8; 32]>())
}

impl SessionService {
    pub fn new(store: Arc<Store>, backend: Arc<dyn ChatBackend>, clock: Arc<dyn Clock>, config: ServiceConfig) -> Self {
        Self { store, backend, clock, config, locks: Mutex::default() }
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn session_url(&self, token: &str) -> String {
        format!("{}/session/{token}", self.config.public_url)
    }

    pub fn share_url(&self, share_token: &str) -> String {
        format!("{}/shared/{share_token}", self.config.public_url)
    }

    fn lock_for(&self, token: &str) -> Arc<tokio::sync::Mutex<()>> {
        self.locks.lock().unwrap_or_else(|e| e.into_inner()).entry(token.to_string()).or_default().clone()
    }

    fn record(&self, event_type: EventType, s: &Session, is_initial: Option<bool>) {
        let ev = UsageEvent {
            event_type,
            owner_id: s.owner_id.clone(),
            session_token: Some(s.token.clone()),
            is_initial,
            error_kind: s.context.kind,
            timestamp: self.clock.now(),
            is_staff: false,
        };
        // losing a usage event must never cost the student their answer
        if let Err(e) = self.store.record(ev) {
            tracing::warn!(error = %e, token = %s.token, "could not record usage event");
        }
    }

    fn load(&self, token: &str) -> Result<Session, ServiceError> {
        self.store.session(token)?.ok_or(ServiceError::NotFound)
    }

    fn resolve(&self, token: &str) -> Result<(String, Access), ServiceError> {
        self.store.resolve(token)?.ok_or(ServiceError::NotFound)
    }

    /// The session token behind an owner token; share tokens are refused.
    pub fn require_owner(&self, token: &str) -> Result<String, ServiceError> {
        match self.resolve(token)? {
            (t, Access::Owner) => Ok(t),
            (_, Access::ReadOnly) => Err(ServiceError::Forbidden("shared links are read-only")),
        }
    }

    /// Stores a new, unvisited session. A non-empty `seed_explanation` (the
    /// one-shot explanation the student already saw) becomes the first turn.
    pub async fn create_session(
        &self,
        ctx: ErrorContext,
        owner_id: &str,
        seed_explanation: Option<&str>,
    ) -> Result<Session, ServiceError> {
        ctx.validate().map_err(|e| ServiceError::Validation(e.to_string()))?;
        let owner_id = owner_id.trim();
        if owner_id.is_empty() {
            return Err(ServiceError::Validation("owner_id must not be empty".into()));
        }
        let now = self.clock.now();
        let mut turns = Vec::new();
        if let Some(seed) = seed_explanation.filter(|s| !s.trim().is_empty()) {
            let (text, outcome) = apply_guardrails(seed, self.backend.as_ref(), &self.config.params).await;
            turns.push(Turn::assistant(text, outcome, now));
        }
        let mut token = new_token();
        while !self.store.token_free(&token)? {
            token = new_token();
        }
        let session = Session {
            token,
            owner_id: owner_id.to_string(),
            context: ctx,
            turns,
            visited: false,
            share_tokens: Default::default(),
            created_at: now,
        };
        self.store.insert_session(&session)?;
        self.record(EventType::SessionCreated, &session, None);
        Ok(session)
    }

    /// The dashboard view for a session or share token. The owner's first
    /// visit generates the initial explanation; share views never generate.
    pub async fn visit_session(&self, token: &str) -> Result<SessionView, ServiceError> {
        let (session_token, access) = self.resolve(token)?;
        if access == Access::ReadOnly {
            return Ok(SessionView::new(&self.load(&session_token)?, false, false));
        }
        let lock = self.lock_for(&session_token);
        let _guard = lock.lock().await;
        let mut s = self.load(&session_token)?;
        if !s.visited {
            self.store.mark_visited(&s.token)?;
            s.visited = true;
            self.record(EventType::SessionVisited, &s, None);
            if s.turns.is_empty() {
                match self.answer(&mut s).await {
                    Ok(_) | Err(ServiceError::Backend(_)) => {}
                    Err(e) => return Err(e),
                }
            }
        }
        let warn = self.check_overuse(&s.owner_id, self.clock.now())?.warn;
        Ok(SessionView::new(&s, true, warn))
    }

    /// Appends the student's question and the assistant's reply.
    ///
    /// If generation fails the question is kept and the session waits for
    /// [`retry`](Self::retry).
    pub async fn post_message(&self, token: &str, text: &str) -> Result<Turn, ServiceError> {
        let session_token = self.require_owner(token)?;
        if text.trim().is_empty() {
            return Err(ServiceError::Validation("message text must not be empty".into()));
        }
        let lock = self.lock_for(&session_token);
        let _guard = lock.lock().await;
        let mut s = self.load(&session_token)?;
        if !s.visited || s.turns.is_empty() {
            return Err(ServiceError::Conflict("the first explanation has not been generated yet".into()));
        }
        if s.pending() {
            return Err(ServiceError::Conflict("the previous message is still waiting for a reply; retry it first".into()));
        }
        let question = Turn::user(text, self.clock.now());
        self.store.append_turn(&s.token, s.turns.len(), &question)?;
        s.turns.push(question);
        self.answer(&mut s).await
    }

    /// Regenerates whatever failed last: the first explanation or the reply
    /// to the latest question.
    pub async fn retry(&self, token: &str) -> Result<Turn, ServiceError> {
        let session_token = self.require_owner(token)?;
        let lock = self.lock_for(&session_token);
        let _guard = lock.lock().await;
        let mut s = self.load(&session_token)?;
        if !s.visited {
            return Err(ServiceError::Conflict("the session has not been opened yet".into()));
        }
        if !s.pending() {
            return Err(ServiceError::Conflict("nothing to retry".into()));
        }
        self.answer(&mut s).await
    }

    /// Generates the assistant turn that `s` is waiting for: the initial
    /// explanation when there are no turns, otherwise the reply to the
    /// trailing question. Caller holds the session lock.
    async fn answer(&self, s: &mut Session) -> Result<Turn, ServiceError> {
        let initial = s.turns.is_empty();
        let messages: Vec<PromptMessage> = if initial {
            self.config.prompts.build_initial(&s.context)
        } else {
            let (question, history) = s.turns.split_last().expect("non-empty");
            debug_assert_eq!(question.role, TurnRole::User);
            self.config.prompts.build_followup(history, &s.context, &question.text)
        };
        let request = self.config.params.request(messages);
        let reply = self.backend.chat(&request).await.map_err(|e| {
            tracing::warn!(error = %e, token = %s.token, "generation failed");
            ServiceError::Backend(e.to_string())
        })?;
        let (mut text, outcome) = apply_guardrails(&reply.text, self.backend.as_ref(), &self.config.params).await;
        let now = self.clock.now();
        if self.check_overuse(&s.owner_id, now)?.warn {
            text = format!("{OVERUSE_REMINDER}\n\n{text}");
        }
        let turn = Turn::assistant(text, outcome, now);
        self.store.append_turn(&s.token, s.turns.len(), &turn)?;
        s.turns.push(turn.clone());
        self.record(EventType::Inference, s, Some(initial));
        Ok(turn)
    }

    pub async fn create_share_link(&self, token: &str) -> Result<String, ServiceError> {
        let session_token = self.require_owner(token)?;
        loop {
            let share = new_token();
            if self.store.insert_share(&share, &session_token, self.clock.now())? {
                return Ok(share);
            }
        }
    }

    /// Sessions `owner_id` started in the trailing window ending at `now`.
    pub fn check_overuse(&self, owner_id: &str, now: DateTime<Utc>) -> Result<OveruseStatus, ServiceError> {
        let window = self.config.overuse_window_min;
        let count = self.store.sessions_created_between(owner_id, now - Duration::minutes(window.into()), now)?;
        Ok(OveruseStatus { warn: count > self.config.overuse_threshold, recent_session_count: count, window_minutes: window })
    }
}
