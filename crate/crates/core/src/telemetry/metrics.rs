use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use chrono::NaiveDate;
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

use super::{classify_hours, EventType, Period, UsageEvent};
use crate::capture::ErrorKind;

#[derive(Clone, Debug)]
pub struct MetricsConfig {
    pub tz: Tz,
    /// Monday (or whichever day) of week 1.
    pub term_start: NaiveDate,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MultiInference {
    pub overall: Option<f64>,
    pub compile_time: Option<f64>,
    pub run_time: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeekCount {
    /// 1 for the week starting on the term start date; earlier events get 0 or below.
    pub week: i64,
    pub compile_time: u64,
    pub run_time: u64,
    pub total: u64,
}

/// Aggregate usage statistics. Rates are `None` when their denominator is zero.
///
/// A "session" here is a launched session: one that was created and then
/// opened at least once. Created-but-unopened sessions only feed
/// `pct_never_visited`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub unique_users: u64,
    pub sessions_created: u64,
    pub total_sessions: u64,
    pub total_inferences: u64,
    pub help_uses: u64,
    pub sessions_per_student: Option<f64>,
    pub pct_multi_inference: MultiInference,
    pub avg_followups_overall: Option<f64>,
    pub avg_followups_conditional: Option<f64>,
    pub pct_never_visited: Option<f64>,
    pub pct_business_hours: Option<f64>,
    pub pct_out_of_hours: Option<f64>,
    pub pct_midnight_to_6am: Option<f64>,
    pub weekly_timeline: Vec<WeekCount>,
}

#[derive(Default)]
struct SessionTally {
    owner: String,
    kind: Option<ErrorKind>,
    created: bool,
    visited: bool,
    inferences: u64,
    followups: u64,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

fn pct(num: u64, den: u64) -> Option<f64> {
    ratio(num, den).map(|r| r * 100.0)
}

/// Aggregates a stream of events. Staff events are dropped first.
///
/// * follow-up: any non-initial inference
/// * avg_followups_overall: follow-ups / sessions with at least one inference
/// * avg_followups_conditional: follow-ups / sessions with at least one follow-up
/// * multi-inference: a launched session with two or more responses
/// * hour split and weekly timeline: over session launches (first visits)
pub fn compute_metrics(events: impl IntoIterator<Item = UsageEvent>, config: &MetricsConfig) -> MetricsReport {
    let mut sessions: HashMap<String, SessionTally> = HashMap::new();
    let mut help_uses = 0u64;
    let mut total_inferences = 0u64;
    let mut business = 0u64;
    let mut late_night = 0u64;
    let mut launches = 0u64;
    let mut weeks: BTreeMap<i64, WeekCount> = BTreeMap::new();

    for ev in events.into_iter().filter(|e| !e.is_staff) {
        if ev.event_type == EventType::HelpUsed {
            help_uses += 1;
            continue;
        }
        let Some(token) = ev.session_token.clone() else { continue };
        let tally = sessions.entry(token).or_default();
        if tally.owner.is_empty() {
            tally.owner = ev.owner_id.clone();
        }
        tally.kind.get_or_insert(ev.error_kind);
        match ev.event_type {
            EventType::SessionCreated => tally.created = true,
            EventType::SessionVisited => {
                if tally.visited {
                    continue;
                }
                tally.visited = true;
                launches += 1;
                let class = classify_hours(ev.timestamp, config.tz);
                business += u64::from(class.period == Period::Business);
                late_night += u64::from(class.late_night);
                let local = ev.timestamp.with_timezone(&config.tz).date_naive();
                let week = (local - config.term_start).num_days().div_euclid(7) + 1;
                let row = weeks.entry(week).or_insert_with(|| WeekCount { week, ..Default::default() });
                match ev.error_kind {
                    ErrorKind::CompileTime => row.compile_time += 1,
                    ErrorKind::RunTime => row.run_time += 1,
                }
                row.total += 1;
            }
            EventType::Inference => {
                total_inferences += 1;
                tally.inferences += 1;
                if ev.is_initial == Some(false) {
                    tally.followups += 1;
                }
            }
            EventType::HelpUsed => unreachable!(),
        }
    }

    let launched: Vec<&SessionTally> = sessions.values().filter(|s| s.visited).collect();
    let created = sessions.values().filter(|s| s.created).count() as u64;
    let never_visited = sessions.values().filter(|s| s.created && !s.visited).count() as u64;
    let unique_users = launched.iter().map(|s| s.owner.as_str()).collect::<HashSet<_>>().len() as u64;

    let with_inference = sessions.values().filter(|s| s.inferences > 0).count() as u64;
    let followups: u64 = sessions.values().map(|s| s.followups).sum();
    let with_followup = sessions.values().filter(|s| s.followups > 0).count() as u64;

    let is_multi = |s: &&&SessionTally| s.inferences >= 2 || s.followups >= 1;
    let of_kind = |k: ErrorKind| launched.iter().filter(move |s| s.kind == Some(k));
    let multi_all = launched.iter().filter(is_multi).count() as u64;
    let multi_compile = of_kind(ErrorKind::CompileTime).filter(is_multi).count() as u64;
    let multi_run = of_kind(ErrorKind::RunTime).filter(is_multi).count() as u64;

    MetricsReport {
        unique_users,
        sessions_created: created,
        total_sessions: launched.len() as u64,
        total_inferences,
        help_uses,
        sessions_per_student: ratio(launched.len() as u64, unique_users),
        pct_multi_inference: MultiInference {
            overall: pct(multi_all, launched.len() as u64),
            compile_time: pct(multi_compile, of_kind(ErrorKind::CompileTime).count() as u64),
            run_time: pct(multi_run, of_kind(ErrorKind::RunTime).count() as u64),
        },
        avg_followups_overall: ratio(followups, with_inference),
        avg_followups_conditional: ratio(followups, with_followup),
        pct_never_visited: pct(never_visited, created),
        pct_business_hours: pct(business, launches),
        pct_out_of_hours: pct(launches - business, launches),
        pct_midnight_to_6am: pct(late_night, launches),
        weekly_timeline: weeks.into_values().collect(),
    }
}

impl MetricsReport {
    pub fn to_markdown(&self) -> String {
        fn num(v: Option<f64>, digits: usize) -> String {
            v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.digits$}"))
        }
        fn percent(v: Option<f64>) -> String {
            v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.1}%"))
        }
        let mut out = String::from("# Usage report\n\n| Metric | Value |\n|---|---|\n");
        let rows = [
            ("Unique users", self.unique_users.to_string()),
            ("Sessions created", self.sessions_created.to_string()),
            ("Sessions launched", self.total_sessions.to_string()),
            ("Inferences", self.total_inferences.to_string()),
            ("In-terminal help uses", self.help_uses.to_string()),
            ("Sessions per student", num(self.sessions_per_student, 2)),
            ("Multi-inference sessions", percent(self.pct_multi_inference.overall)),
            ("Multi-inference (compile-time)", percent(self.pct_multi_inference.compile_time)),
            ("Multi-inference (run-time)", percent(self.pct_multi_inference.run_time)),
            ("Follow-ups per starting message", num(self.avg_followups_overall, 2)),
            ("Follow-ups per session with a follow-up", num(self.avg_followups_conditional, 2)),
            ("Never visited", percent(self.pct_never_visited)),
            ("Business hours (9am-5pm)", percent(self.pct_business_hours)),
            ("Out of hours (5pm-9am)", percent(self.pct_out_of_hours)),
            ("Midnight to 6am", percent(self.pct_midnight_to_6am)),
        ];
        for (k, v) in rows {
            let _ = writeln!(out, "| {k} | {v} |");
        }
        out.push_str("\n## Sessions per week\n\n| Week | Compile-time | Run-time | Total |\n|---:|---:|---:|---:|\n");
        for w in &self.weekly_timeline {
            let _ = writeln!(out, "| {} | {} | {} | {} |", w.week, w.compile_time, w.run_time, w.total);
        }
        out
    }
}
