//! SQLite persistence for sessions, turns, share links and usage events.

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::Mutex;

use chrono::{DateTime, SecondsFormat, Utc};
use rusqlite::{params, Connection, OptionalExtension};
use sidekick_core::capture::{ErrorContext, ErrorKind};
use sidekick_core::guardrails::GuardrailOutcome;
use sidekick_core::telemetry::{EventSink, EventType, StaffList, TelemetryError, UsageEvent};
use sidekick_core::{Turn, TurnRole};

use crate::session::Session;

const SCHEMA: &str = "
PRAGMA foreign_keys = ON;
CREATE TABLE IF NOT EXISTS sessions (
    token       TEXT PRIMARY KEY,
    owner_id    TEXT NOT NULL,
    context     TEXT NOT NULL,
    visited     INTEGER NOT NULL DEFAULT 0,
    created_at  TEXT NOT NULL
);
CREATE INDEX IF NOT EXISTS sessions_by_owner ON sessions (owner_id, created_at);
CREATE TABLE IF NOT EXISTS turns (
    session_token TEXT NOT NULL REFERENCES sessions (token),
    seq           INTEGER NOT NULL,
    role          TEXT NOT NULL CHECK (role IN ('assistant', 'user')),
    text          TEXT NOT NULL,
    guardrail     TEXT,
    created_at    TEXT NOT NULL,
    PRIMARY KEY (session_token, seq)
);
CREATE TABLE IF NOT EXISTS share_tokens (
    share_token   TEXT PRIMARY KEY,
    session_token TEXT NOT NULL REFERENCES sessions (token),
    created_at    TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS events (
    id            INTEGER PRIMARY KEY AUTOINCREMENT,
    event_type    TEXT NOT NULL,
    owner_id      TEXT NOT NULL,
    session_token TEXT,
    is_initial    INTEGER,
    error_kind    TEXT NOT NULL,
    timestamp     TEXT NOT NULL,
    is_staff      INTEGER NOT NULL
);
CREATE INDEX IF NOT EXISTS events_by_session ON events (session_token, timestamp);
CREATE TRIGGER IF NOT EXISTS events_no_update BEFORE UPDATE ON events
    BEGIN SELECT RAISE(ABORT, 'events are append-only'); END;
CREATE TRIGGER IF NOT EXISTS events_no_delete BEFORE DELETE ON events
    BEGIN SELECT RAISE(ABORT, 'events are append-only'); END;
";

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("database: {0}")]
    Sqlite(#[from] rusqlite::Error),
    #[error("stored row is corrupt: {0}")]
    Corrupt(String),
    #[error("turn out of order for session {0}")]
    OutOfOrder(String),
}

/// How a token grants access to a session.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Access {
    Owner,
    ReadOnly,
}

pub struct Store {
    conn: Mutex<Connection>,
    staff: StaffList,
}

/// Fixed-width UTC timestamps so that text order is time order.
fn ts(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Micros, true)
}

fn parse_ts(s: &str) -> Result<DateTime<Utc>, StoreError> {
    DateTime::parse_from_rfc3339(s)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| StoreError::Corrupt(format!("timestamp {s:?}: {e}")))
}

fn enum_text<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_value(v).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

fn enum_from<T: serde::de::DeserializeOwned>(s: &str) -> Result<T, StoreError> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|e| StoreError::Corrupt(format!("{s:?}: {e}")))
}

impl Store {
    pub fn open(path: &Path, staff: StaffList) -> Result<Self, StoreError> {
        Self::init(Connection::open(path)?, staff)
    }

    pub fn open_in_memory(staff: StaffList) -> Result<Self, StoreError> {
        Self::init(Connection::open_in_memory()?, staff)
    }

    fn init(conn: Connection, staff: StaffList) -> Result<Self, StoreError> {
        conn.busy_timeout(std::time::Duration::from_secs(5))?;
        conn.execute_batch(SCHEMA)?;
        Ok(Self { conn: Mutex::new(conn), staff })
    }

    fn conn(&self) -> std::sync::MutexGuard<'_, Connection> {
        self.conn.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn insert_session(&self, s: &Session) -> Result<(), StoreError> {
        let context = serde_json::to_string(&s.context).map_err(|e| StoreError::Corrupt(e.to_string()))?;
        let mut conn = self.conn();
        let tx = conn.transaction()?;
        tx.execute(
            "INSERT INTO sessions (token, owner_id, context, visited, created_at) VALUES (?1, ?2, ?3, ?4, ?5)",
            params![s.token, s.owner_id, context, s.visited, ts(s.created_at)],
        )?;
        for (seq, turn) in s.turns.iter().enumerate() {
            insert_turn(&tx, &s.token, seq, turn)?;
        }
        tx.commit()?;
        Ok(())
    }

    pub fn session(&self, token: &str) -> Result<Option<Session>, StoreError> {
        let conn = self.conn();
        let row = conn
            .query_row(
                "SELECT owner_id, context, visited, created_at FROM sessions WHERE token = ?1",
                [token],
                |r| Ok((r.get::<_, String>(0)?, r.get::<_, String>(1)?, r.get::<_, bool>(2)?, r.get::<_, String>(3)?)),
            )
            .optional()?;
        let Some((owner_id, context, visited, created_at)) = row else {
            return Ok(None);
        };
        let context: ErrorContext =
            serde_json::from_str(&context).map_err(|e| StoreError::Corrupt(format!("context of {token}: {e}")))?;

        let mut stmt =
            conn.prepare_cached("SELECT role, text, guardrail, created_at FROM turns WHERE session_token = ?1 ORDER BY seq")?;
        let rows = stmt.query_map([token], |r| {
            Ok((r.get::<_, String>(0)?, r.get::<_, String>(1)?, r.get::<_, Option<String>>(2)?, r.get::<_, String>(3)?))
        })?;
        let mut turns = Vec::new();
        for row in rows {
            let (role, text, guardrail, at) = row?;
            let guardrail: Option<GuardrailOutcome> = guardrail
                .map(|g| serde_json::from_str(&g))
                .transpose()
                .map_err(|e| StoreError::Corrupt(e.to_string()))?;
            turns.push(Turn { role: enum_from::<TurnRole>(&role)?, text, guardrail, created_at: parse_ts(&at)? });
        }

        let mut stmt = conn.prepare_cached("SELECT share_token FROM share_tokens WHERE session_token = ?1")?;
        let share_tokens = stmt.query_map([token], |r| r.get::<_, String>(0))?.collect::<Result<BTreeSet<_>, _>>()?;

        Ok(Some(Session {
            token: token.to_string(),
            owner_id,
            context,
            turns,
            visited,
            share_tokens,
            created_at: parse_ts(&created_at)?,
        }))
    }

    /// Maps a session or share token to the session token it opens.
    pub fn resolve(&self, token: &str) -> Result<Option<(String, Access)>, StoreError> {
        let conn = self.conn();
        let own: Option<String> =
            conn.query_row("SELECT token FROM sessions WHERE token = ?1", [token], |r| r.get(0)).optional()?;
        if let Some(t) = own {
            return Ok(Some((t, Access::Owner)));
        }
        let shared: Option<String> = conn
            .query_row("SELECT session_token FROM share_tokens WHERE share_token = ?1", [token], |r| r.get(0))
            .optional()?;
        Ok(shared.map(|t| (t, Access::ReadOnly)))
    }

    /// Sets `visited`; true when this call flipped it.
    pub fn mark_visited(&self, token: &str) -> Result<bool, StoreError> {
        let n = self.conn().execute("UPDATE sessions SET visited = 1 WHERE token = ?1 AND visited = 0", [token])?;
        Ok(n == 1)
    }

    /// Appends `turn` as turn number `seq`, which must be the next free slot.
    pub fn append_turn(&self, token: &str, seq: usize, turn: &Turn) -> Result<(), StoreError> {
        let mut conn = self.conn();
        let tx = conn.transaction()?;
        let count: i64 = tx.query_row("SELECT COUNT(*) FROM turns WHERE session_token = ?1", [token], |r| r.get(0))?;
        if count as usize != seq {
            return Err(StoreError::OutOfOrder(token.to_string()));
        }
        insert_turn(&tx, token, seq, turn)?;
        tx.commit()?;
        Ok(())
    }

    /// False if the token is already taken, as a session or a share token.
    pub fn insert_share(&self, share_token: &str, session_token: &str, at: DateTime<Utc>) -> Result<bool, StoreError> {
        let conn = self.conn();
        let clash: i64 = conn.query_row(
            "SELECT (SELECT COUNT(*) FROM sessions WHERE token = ?1) + (SELECT COUNT(*) FROM share_tokens WHERE share_token = ?1)",
            [share_token],
            |r| r.get(0),
        )?;
        if clash > 0 {
            return Ok(false);
        }
        conn.execute(
            "INSERT INTO share_tokens (share_token, session_token, created_at) VALUES (?1, ?2, ?3)",
            params![share_token, session_token, ts(at)],
        )?;
        Ok(true)
    }

    /// True if the token is free for a new session.
    pub fn token_free(&self, token: &str) -> Result<bool, StoreError> {
        Ok(self.resolve(token)?.is_none())
    }

    /// Sessions `owner_id` created in the half-open interval `(since, until]`.
    pub fn sessions_created_between(
        &self,
        owner_id: &str,
        since: DateTime<Utc>,
        until: DateTime<Utc>,
    ) -> Result<usize, StoreError> {
        let n: i64 = self.conn().query_row(
            "SELECT COUNT(*) FROM sessions WHERE owner_id = ?1 AND created_at > ?2 AND created_at <= ?3",
            params![owner_id, ts(since), ts(until)],
            |r| r.get(0),
        )?;
        Ok(n as usize)
    }

    pub fn all_session_tokens(&self) -> Result<Vec<String>, StoreError> {
        let conn = self.conn();
        let mut stmt = conn.prepare("SELECT token FROM sessions ORDER BY created_at, token")?;
        let tokens = stmt.query_map([], |r| r.get(0))?.collect::<Result<Vec<String>, _>>()?;
        Ok(tokens)
    }

    /// Every recorded event, oldest first.
    pub fn events(&self) -> Result<Vec<UsageEvent>, StoreError> {
        let conn = self.conn();
        let mut stmt = conn.prepare(
            "SELECT event_type, owner_id, session_token, is_initial, error_kind, timestamp, is_staff FROM events ORDER BY id",
        )?;
        let rows = stmt.query_map([], |r| {
            Ok((
                r.get::<_, String>(0)?,
                r.get::<_, String>(1)?,
                r.get::<_, Option<String>>(2)?,
                r.get::<_, Option<bool>>(3)?,
                r.get::<_, String>(4)?,
                r.get::<_, String>(5)?,
                r.get::<_, bool>(6)?,
            ))
        })?;
        let mut out = Vec::new();
        for row in rows {
            let (event_type, owner_id, session_token, is_initial, error_kind, timestamp, is_staff) = row?;
            out.push(UsageEvent {
                event_type: enum_from::<EventType>(&event_type)?,
                owner_id,
                session_token,
                is_initial,
                error_kind: enum_from::<ErrorKind>(&error_kind)?,
                timestamp: parse_ts(&timestamp)?,
                is_staff,
            });
        }
        Ok(out)
    }
}

fn insert_turn(conn: &Connection, token: &str, seq: usize, turn: &Turn) -> Result<(), StoreError> {
    let guardrail = turn
        .guardrail
        .as_ref()
        .map(serde_json::to_string)
        .transpose()
        .map_err(|e| StoreError::Corrupt(e.to_string()))?;
    conn.execute(
        "INSERT INTO turns (session_token, seq, role, text, guardrail, created_at) VALUES (?1, ?2, ?3, ?4, ?5, ?6)",
        params![token, seq as i64, enum_text(&turn.role), turn.text, guardrail, ts(turn.created_at)],
    )?;
    Ok(())
}

impl EventSink for Store {
    fn record(&self, mut ev: UsageEvent) -> Result<UsageEvent, TelemetryError> {
        ev.validate()?;
        ev.is_staff = self.staff.contains(&ev.owner_id);
        let conn = self.conn();
        let storage = |e: rusqlite::Error| TelemetryError::Io(std::io::Error::other(e));
        if let Some(tok) = &ev.session_token {
            let last: Option<String> = conn
                .query_row("SELECT MAX(timestamp) FROM events WHERE session_token = ?1", [tok], |r| r.get(0))
                .map_err(storage)?;
            if last.is_some_and(|l| ts(ev.timestamp) < l) {
                return Err(TelemetryError::Malformed(format!(
                    "timestamp {} precedes an earlier event of session {tok}",
                    ev.timestamp
                )));
            }
        }
        conn.execute(
            "INSERT INTO events (event_type, owner_id, session_token, is_initial, error_kind, timestamp, is_staff)
             VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7)",
            params![
                enum_text(&ev.event_type),
                ev.owner_id,
                ev.session_token,
                ev.is_initial,
                enum_text(&ev.error_kind),
                ts(ev.timestamp),
                ev.is_staff
            ],
        )
        .map_err(storage)?;
        Ok(ev)
    }
}
