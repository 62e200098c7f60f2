//! Random operation sequences against the session service, checking the
//! session invariants after every step.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashSet};
use std::sync::{Arc, Mutex};

use chrono::{TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sidekick_core::capture::{Diagnostic, ErrorContext, ErrorKind, Severity, SourceFile, StackFrame};
use sidekick_core::contains_code_block;
use sidekick_core::llm::{MockBackend, MockReply};
use sidekick_core::telemetry::{EventType, StaffList};
use sidekick_core::TurnRole;
use sidekick_server::{ManualClock, ServiceConfig, ServiceError, Session, SessionService, Store};

#[derive(Debug, Default)]
pub struct OpsReport {
    pub ops: usize,
    pub per_op: BTreeMap<&'static str, usize>,
    pub sessions: usize,
    pub violations: Vec<String>,
}

fn ctx(rng: &mut ChaCha8Rng) -> ErrorContext {
    let run = rng.random_bool(0.3);
    ErrorContext {
        kind: if run { ErrorKind::RunTime } else { ErrorKind::CompileTime },
        created_at: Utc.with_ymd_and_hms(2024, 3, 4, 10, 0, 0).unwrap(),
        source_files: vec![SourceFile { path: "a.c".into(), text: "int main(void) { return x }\n".into() }],
        compiler_invocation: "gcc a.c".into(),
        diagnostics: vec![Diagnostic {
            file: "a.c".into(),
            line: 1,
            column: 25,
            severity: Severity::Error,
            message: "'x' undeclared".into(),
            raw: "a.c:1:25: error: 'x' undeclared".into(),
        }],
        runtime_signal: run.then(|| "SIGSEGV".to_string()),
        stack: if run {
            vec![StackFrame { function_name: "main".into(), file: "a.c".into(), line: 1, locals: vec![] }]
        } else {
            vec![]
        },
        stdin_excerpt: None,
        exit_status: 1,
    }
}

/// Replies fail a fifth of the time and carry code blocks another fifth.
fn flaky_backend(seed: u64) -> MockBackend {
    let rng = Mutex::new(ChaCha8Rng::seed_from_u64(seed ^ 0x5eed));
    MockBackend::from_fn(move |_| {
        let mut rng = rng.lock().unwrap();
        match rng.random_range(0..5) {
            0 => MockReply::Fail("backend unavailable".into()),
            1 => MockReply::Text("Try:\n```c\nint x = 0;\n```\nthen recompile.".into()),
            _ => MockReply::Text(format!("Hint number {}.", rng.random::<u16>())),
        }
    })
}

fn check_session(s: &Session, seeded: bool, out: &mut Vec<String>) {
    if !s.turns_alternate() {
        out.push(format!("{}: turns do not alternate: {:?}", s.token, s.turns.iter().map(|t| t.role).collect::<Vec<_>>()));
    }
    if s.turns.iter().any(|t| t.role == TurnRole::Assistant && contains_code_block(&t.text)) {
        out.push(format!("{}: code block reached an assistant turn", s.token));
    }
    if !s.visited && !s.turns.is_empty() && !seeded {
        out.push(format!("{}: unvisited session has turns", s.token));
    }
    if s.share_tokens.contains(&s.token) {
        out.push(format!("{}: owner token doubles as a share token", s.token));
    }
}

pub async fn run_random_ops(seed: u64, n_ops: usize) -> OpsReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let clock = Arc::new(ManualClock::new(Utc.with_ymd_and_hms(2024, 3, 4, 9, 0, 0).unwrap()));
    let store = Arc::new(Store::open_in_memory(StaffList::default()).unwrap());
    let svc = SessionService::new(store.clone(), Arc::new(flaky_backend(seed)), clock.clone(), ServiceConfig::default());

    let mut report = OpsReport::default();
    let mut sessions: Vec<String> = Vec::new();
    let mut seeded: HashSet<String> = HashSet::new();
    let mut shares: Vec<(String, String)> = Vec::new();
    let owners = ["z1000001", "z1000002", "z1000003", "z1000004", "z1000005"];

    for _ in 0..n_ops {
        clock.advance(chrono::Duration::seconds(rng.random_range(1..30)));
        let pick = |rng: &mut ChaCha8Rng, v: &[String]| v[rng.random_range(0..v.len())].clone();
        let mut op = if sessions.is_empty() { 0 } else { rng.random_range(0..10) };
        if op >= 8 && shares.is_empty() {
            op = 6;
        }
        let (name, touched): (&'static str, Option<String>) = match op {
            0 => {
                let owner = owners[rng.random_range(0..owners.len())];
                let seed_text = rng.random_bool(0.1).then_some("You forgot to declare x.");
                match svc.create_session(ctx(&mut rng), owner, seed_text).await {
                    Ok(s) => {
                        if seed_text.is_some() {
                            seeded.insert(s.token.clone());
                        }
                        sessions.push(s.token.clone());
                        ("create", Some(s.token))
                    }
                    Err(e) => {
                        report.violations.push(format!("create failed: {e}"));
                        ("create", None)
                    }
                }
            }
            1 | 2 => {
                let t = pick(&mut rng, &sessions);
                if let Err(e) = svc.visit_session(&t).await {
                    report.violations.push(format!("owner visit failed: {e}"));
                }
                ("visit", Some(t))
            }
            3 | 4 | 5 => {
                let t = pick(&mut rng, &sessions);
                let before = store.session(&t).unwrap().unwrap();
                let text = if rng.random_bool(0.1) { "  " } else { "what does that mean?" };
                let res = svc.post_message(&t, text).await;
                let ready = before.visited && !before.turns.is_empty() && !before.pending();
                let ok = match (&res, text.trim().is_empty(), ready) {
                    (Err(ServiceError::Validation(_)), true, _) => true,
                    (Err(ServiceError::Conflict(_)), false, false) => true,
                    (Ok(_) | Err(ServiceError::Backend(_)), false, true) => true,
                    _ => false,
                };
                if !ok {
                    report.violations.push(format!("post on {t}: unexpected {res:?} (ready={ready})"));
                }
                ("post", Some(t))
            }
            6 => {
                let t = pick(&mut rng, &sessions);
                match svc.create_share_link(&t).await {
                    Ok(share) => shares.push((share, t.clone())),
                    Err(e) => report.violations.push(format!("share failed: {e}")),
                }
                ("share", Some(t))
            }
            7 => {
                let t = pick(&mut rng, &sessions);
                let before = store.session(&t).unwrap().unwrap();
                let res = svc.retry(&t).await;
                let ok = match &res {
                    Ok(_) | Err(ServiceError::Backend(_)) => before.visited && before.pending(),
                    Err(ServiceError::Conflict(_)) => !(before.visited && before.pending()),
                    _ => false,
                };
                if !ok {
                    report.violations.push(format!("retry on {t}: unexpected {res:?}"));
                }
                ("retry", Some(t))
            }
            _ => {
                // everything a share token can attempt
                let (share, owner_token) = shares[rng.random_range(0..shares.len())].clone();
                let before = store.session(&owner_token).unwrap().unwrap();
                match svc.visit_session(&share).await {
                    Ok(v) if !v.can_post && v.turns.len() == before.turns.len() => {}
                    other => report.violations.push(format!("share view: {other:?}")),
                }
                let attempts = [
                    svc.post_message(&share, "let me in").await.err(),
                    svc.retry(&share).await.err(),
                    svc.create_share_link(&share).await.err(),
                ];
                for a in attempts {
                    if !matches!(a, Some(ServiceError::Forbidden(_))) {
                        report.violations.push(format!("share token mutation not forbidden: {a:?}"));
                    }
                }
                if store.session(&owner_token).unwrap().unwrap() != before {
                    report.violations.push(format!("share token changed session {owner_token}"));
                }
                ("shared", Some(owner_token))
            }
        };
        report.ops += 1;
        *report.per_op.entry(name).or_default() += 1;
        if let Some(t) = touched {
            let s = store.session(&t).unwrap().unwrap();
            check_session(&s, seeded.contains(&t), &mut report.violations);
        }
    }

    // every inference is accounted for by exactly one assistant turn
    let events = store.events().unwrap();
    for t in &sessions {
        let s = store.session(t).unwrap().unwrap();
        let mine = events.iter().filter(|e| e.session_token.as_deref() == Some(t.as_str()));
        let initial = mine.clone().filter(|e| e.event_type == EventType::Inference && e.is_initial == Some(true)).count();
        let followups = mine.clone().filter(|e| e.event_type == EventType::Inference && e.is_initial == Some(false)).count();
        let visits = mine.filter(|e| e.event_type == EventType::SessionVisited).count();
        let assistant = s.turns.iter().filter(|x| x.role == TurnRole::Assistant).count();
        let is_seeded = seeded.contains(t);
        let want_initial = usize::from(!is_seeded && assistant > 0);
        if initial != want_initial {
            report.violations.push(format!("{t}: {initial} initial inferences, expected {want_initial}"));
        }
        if initial + followups + usize::from(is_seeded) != assistant {
            report.violations.push(format!("{t}: {assistant} assistant turns but {} inference events", initial + followups));
        }
        if visits != usize::from(s.visited) {
            report.violations.push(format!("{t}: {visits} visit events"));
        }
    }
    report.sessions = sessions.len();
    report
}

/// Many simultaneous first visits to one session.
pub async fn first_visit_race(visitors: usize) -> (usize, usize, Vec<usize>) {
    let backend = Arc::new(MockBackend::from_fn(|_| {
        std::thread::sleep(std::time::Duration::from_millis(30));
        MockReply::Text("The only explanation.".into())
    }));
    let store = Arc::new(Store::open_in_memory(StaffList::default()).unwrap());
    let svc = Arc::new(SessionService::new(
        store.clone(),
        backend.clone(),
        Arc::new(sidekick_server::SystemClock),
        ServiceConfig::default(),
    ));
    let token = svc.create_session(ctx(&mut ChaCha8Rng::seed_from_u64(1)), "z1", None).await.unwrap().token;
    let tasks: Vec<_> = (0..visitors)
        .map(|_| {
            let svc = svc.clone();
            let token = token.clone();
            tokio::spawn(async move { svc.visit_session(&token).await.unwrap().turns.len() })
        })
        .collect();
    let mut lens = Vec::new();
    for t in tasks {
        lens.push(t.await.unwrap());
    }
    let inferences = store.events().unwrap().iter().filter(|e| e.event_type == EventType::Inference).count();
    (backend.call_count(), inferences, lens)
}
