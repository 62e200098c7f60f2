use std::collections::{HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::capture::ErrorKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventType {
    SessionCreated,
    SessionVisited,
    Inference,
    HelpUsed,
}

/// One line of the usage log.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UsageEvent {
    pub event_type: EventType,
    pub owner_id: String,
    #[serde(default)]
    pub session_token: Option<String>,
    /// Set on inference events only: whether this was the first explanation.
    #[serde(default)]
    pub is_initial: Option<bool>,
    pub error_kind: ErrorKind,
    pub timestamp: DateTime<Utc>,
    #[serde(default)]
    pub is_staff: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum TelemetryError {
    #[error("malformed event: {0}")]
    Malformed(String),
    #[error("event log I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("event log line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

impl UsageEvent {
    pub fn validate(&self) -> Result<(), TelemetryError> {
        let bad = |m: &str| Err(TelemetryError::Malformed(m.to_string()));
        if self.owner_id.trim().is_empty() {
            return bad("owner_id must not be empty");
        }
        match self.event_type {
            EventType::Inference if self.is_initial.is_none() => bad("inference events need is_initial"),
            EventType::Inference | EventType::SessionCreated | EventType::SessionVisited
                if self.session_token.as_deref().is_none_or(str::is_empty) =>
            {
                bad("session events need a session_token")
            }
            EventType::SessionCreated | EventType::SessionVisited | EventType::HelpUsed if self.is_initial.is_some() => {
                bad("is_initial is only meaningful on inference events")
            }
            _ => Ok(()),
        }
    }
}

/// Owner ids whose events belong to course staff.
#[derive(Clone, Debug, Default)]
pub struct StaffList {
    ids: HashSet<String>,
}

impl StaffList {
    pub fn new<I: IntoIterator<Item = S>, S: Into<String>>(ids: I) -> Self {
        Self { ids: ids.into_iter().map(Into::into).collect() }
    }

    /// One id per line; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Self {
        Self::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_string),
        )
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        Ok(Self::parse(&std::fs::read_to_string(path)?))
    }

    pub fn contains(&self, owner_id: &str) -> bool {
        self.ids.contains(owner_id)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Somewhere usage events are appended.
pub trait EventSink: Send + Sync {
    /// Validates, flags staff, and appends. Returns the event as stored.
    fn record(&self, ev: UsageEvent) -> Result<UsageEvent, TelemetryError>;
}

/// Append-only newline-delimited JSON log.
pub struct NdjsonEventLog {
    path: PathBuf,
    staff: StaffList,
    inner: Mutex<LogState>,
}

struct LogState {
    file: File,
    last_seen: HashMap<String, DateTime<Utc>>,
}

impl NdjsonEventLog {
    pub fn open(path: impl Into<PathBuf>, staff: StaffList) -> Result<Self, TelemetryError> {
        let path = path.into();
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        let mut last_seen = HashMap::new();
        if path.exists() {
            for ev in read_events(&path)? {
                let ev = ev?;
                if let Some(tok) = ev.session_token {
                    let slot = last_seen.entry(tok).or_insert(ev.timestamp);
                    *slot = (*slot).max(ev.timestamp);
                }
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(Self { path, staff, inner: Mutex::new(LogState { file, last_seen }) })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl EventSink for NdjsonEventLog {
    fn record(&self, mut ev: UsageEvent) -> Result<UsageEvent, TelemetryError> {
        ev.validate()?;
        ev.is_staff = self.staff.contains(&ev.owner_id);
        let mut state = self.inner.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(tok) = &ev.session_token {
            if let Some(prev) = state.last_seen.get(tok) {
                if ev.timestamp < *prev {
                    return Err(TelemetryError::Malformed(format!(
                        "timestamp {} precedes an earlier event of session {tok}",
                        ev.timestamp
                    )));
                }
            }
        }
        let mut line = serde_json::to_vec(&ev).map_err(|e| TelemetryError::Malformed(e.to_string()))?;
        line.push(b'\n');
        state.file.write_all(&line)?;
        state.file.sync_data()?;
        if let Some(tok) = &ev.session_token {
            state.last_seen.insert(tok.clone(), ev.timestamp);
        }
        Ok(ev)
    }
}

/// Streams events from an NDJSON log, skipping blank lines.
pub fn read_events(path: &Path) -> Result<impl Iterator<Item = Result<UsageEvent, TelemetryError>>, TelemetryError> {
    let reader = BufReader::new(File::open(path)?);
    Ok(reader.lines().enumerate().filter_map(|(i, line)| match line {
        Err(e) => Some(Err(TelemetryError::Io(e))),
        Ok(l) if l.trim().is_empty() => None,
        Ok(l) => Some(serde_json::from_str(&l).map_err(|source| TelemetryError::Parse { line: i + 1, source })),
    }))
}
