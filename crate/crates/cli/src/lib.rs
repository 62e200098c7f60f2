//! The two student commands. `dcc-help` prints a one-shot explanation of the
//! last cached error; `dcc-sidekick` opens a conversation about it on the
//! session server and prints the link.

use std::path::{Path, PathBuf};
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sidekick_core::capture::{default_cache_dir, load_context, CaptureError, ErrorContext};
use sidekick_core::guardrails::apply_guardrails;
use sidekick_core::telemetry::{EventSink, EventType, NdjsonEventLog, StaffList, UsageEvent};
use sidekick_core::{BackendError, ChatBackend, GenerationParams, PromptBuilder};

pub const HELP_NOTE_FILE: &str = "last_help.json";
pub const EVENT_LOG_FILE: &str = "events.ndjson";
pub const DEFAULT_SERVER_URL: &str = "http://127.0.0.1:8080";
pub const SERVER_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("no recent error found. Compile with sidekick-cc (or run your program with sidekick-run) first.")]
    NoContext,
    #[error("could not read the cached error: {0}")]
    Cache(#[from] CaptureError),
    #[error("sorry, the assistant could not be reached right now ({0}). Please try again in a minute.")]
    Backend(#[from] BackendError),
    #[error("could not reach the sidekick server at {url} ({message}). Check your connection and run dcc-sidekick again.")]
    Service { url: String, message: String },
}

/// Where the commands find things. Built from the environment by the
/// binaries and by hand in tests.
#[derive(Clone, Debug)]
pub struct CliEnv {
    pub cache_dir: PathBuf,
    /// Local usage log for one-shot explanations.
    pub event_log: PathBuf,
    pub owner_id: String,
    pub server_url: String,
    pub prompts: PromptBuilder,
    pub params: GenerationParams,
    pub staff: StaffList,
}

impl CliEnv {
    pub fn new(cache_dir: impl Into<PathBuf>, owner_id: impl Into<String>) -> Self {
        let cache_dir = cache_dir.into();
        Self {
            event_log: cache_dir.join(EVENT_LOG_FILE),
            cache_dir,
            owner_id: owner_id.into(),
            server_url: DEFAULT_SERVER_URL.into(),
            prompts: PromptBuilder::default(),
            params: GenerationParams::default(),
            staff: StaffList::default(),
        }
    }

    /// Reads `SIDEKICK_CACHE_DIR`, `SIDEKICK_EVENT_LOG`, `SIDEKICK_OWNER_ID`
    /// (falling back to the login name), `SIDEKICK_SERVER_URL`,
    /// `SIDEKICK_PROMPT_DIR` and `SIDEKICK_STAFF_IDS`.
    pub fn from_env() -> Result<Self, CaptureError> {
        let var = |k: &str| std::env::var(k).ok().filter(|v| !v.trim().is_empty());
        let mut env = Self::new(default_cache_dir()?, "unknown");
        if let Some(owner) = var("SIDEKICK_OWNER_ID").or_else(|| var("USER")).or_else(|| var("LOGNAME")) {
            env.owner_id = owner;
        }
        if let Some(log) = var("SIDEKICK_EVENT_LOG") {
            env.event_log = log.into();
        }
        if let Some(url) = var("SIDEKICK_SERVER_URL") {
            env.server_url = url.trim_end_matches('/').to_string();
        }
        if let Some(dir) = var("SIDEKICK_PROMPT_DIR") {
            env.prompts = PromptBuilder::from_prompt_dir(dir.as_ref()).map_err(CaptureError::Io)?;
        }
        if let Some(path) = var("SIDEKICK_STAFF_IDS") {
            env.staff = StaffList::load(path.as_ref()).map_err(CaptureError::Io)?;
        }
        env.params = GenerationParams::from_env();
        Ok(env)
    }

    fn context(&self) -> Result<ErrorContext, CliError> {
        load_context(&self.cache_dir)?.ok_or(CliError::NoContext)
    }
}

/// The explanation `dcc-help` gave for a particular cached error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HelpNote {
    pub context_created_at: DateTime<Utc>,
    pub compiler_invocation: String,
    pub explanation: String,
}

impl HelpNote {
    fn matches(&self, ctx: &ErrorContext) -> bool {
        self.context_created_at == ctx.created_at && self.compiler_invocation == ctx.compiler_invocation
    }
}

fn help_note_path(cache_dir: &Path) -> PathBuf {
    cache_dir.join(HELP_NOTE_FILE)
}

/// The help explanation for `ctx`, if `dcc-help` produced one.
pub fn load_help_note(cache_dir: &Path, ctx: &ErrorContext) -> Option<HelpNote> {
    let text = std::fs::read_to_string(help_note_path(cache_dir)).ok()?;
    serde_json::from_str::<HelpNote>(&text).ok().filter(|n| n.matches(ctx))
}

/// Explains the cached error once and returns the text to print.
pub async fn cmd_help(env: &CliEnv, backend: &dyn ChatBackend) -> Result<String, CliError> {
    let ctx = env.context()?;
    let request = env.params.request(env.prompts.build_initial(&ctx));
    let reply = backend.chat(&request).await?;
    let (text, _) = apply_guardrails(&reply.text, backend, &env.params).await;

    let note = HelpNote {
        context_created_at: ctx.created_at,
        compiler_invocation: ctx.compiler_invocation.clone(),
        explanation: text.clone(),
    };
    if let Err(e) = serde_json::to_vec_pretty(&note)
        .map_err(std::io::Error::other)
        .and_then(|bytes| std::fs::write(help_note_path(&env.cache_dir), bytes))
    {
        tracing::warn!(error = %e, "could not save the explanation for dcc-sidekick");
    }
    let event = UsageEvent {
        event_type: EventType::HelpUsed,
        owner_id: env.owner_id.clone(),
        session_token: None,
        is_initial: None,
        error_kind: ctx.kind,
        timestamp: Utc::now(),
        is_staff: false,
    };
    if let Err(e) = NdjsonEventLog::open(&env.event_log, env.staff.clone()).and_then(|log| log.record(event)) {
        tracing::warn!(error = %e, "could not record usage");
    }
    Ok(text)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LaunchResult {
    pub session_url: String,
    pub session_token: String,
}

#[derive(Deserialize)]
struct CreatedSession {
    token: String,
}

/// Uploads the cached error to the session server and returns the link to
/// the new, unopened session. No explanation is generated here.
pub async fn cmd_sidekick(env: &CliEnv) -> Result<LaunchResult, CliError> {
    let ctx = env.context()?;
    let seed = load_help_note(&env.cache_dir, &ctx).map(|n| n.explanation);
    let mut body = serde_json::to_value(&ctx).expect("contexts serialize");
    body["owner_id"] = env.owner_id.clone().into();
    if let Some(seed) = seed {
        body["seed_explanation"] = seed.into();
    }

    let service_err = |message: String| CliError::Service { url: env.server_url.clone(), message };
    let client = reqwest::Client::builder()
        .timeout(SERVER_TIMEOUT)
        .build()
        .map_err(|e| service_err(e.to_string()))?;
    let res = client
        .post(format!("{}/api/sessions", env.server_url))
        .json(&body)
        .send()
        .await
        .map_err(|e| service_err(if e.is_timeout() { "timed out".into() } else { e.to_string() }))?;
    let status = res.status();
    if !status.is_success() {
        let detail = res.text().await.unwrap_or_default();
        return Err(service_err(format!("HTTP {status}: {}", detail.trim())));
    }
    let created: CreatedSession = res.json().await.map_err(|e| service_err(e.to_string()))?;
    Ok(LaunchResult {
        session_url: format!("{}/session/{}", env.server_url, created.token),
        session_token: created.token,
    })
}

/// Logs to stderr at `warn` unless `RUST_LOG` says otherwise.
pub fn init_logging() {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()),
        )
        .with_writer(std::io::stderr)
        .without_time()
        .init();
}
