//! Deterministic generator for usage logs with prescribed aggregates.
//!
//! Counts are assigned exactly (by shuffling fixed-size pools), not sampled,
//! so the aggregates of the generated log equal the requested ones.

use chrono::{Duration, NaiveDate, NaiveTime, TimeZone, Utc};
use chrono_tz::Tz;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EventType, UsageEvent};
use crate::capture::ErrorKind;

#[derive(Clone, Debug)]
pub struct SyntheticLogSpec {
    pub users: usize,
    /// Sessions that were created and opened.
    pub launched_sessions: usize,
    /// Sessions created but never opened.
    pub never_visited_sessions: usize,
    pub compile_time_sessions: usize,
    pub compile_time_multi: usize,
    pub run_time_multi: usize,
    pub total_inferences: usize,
    pub business_hours_launches: usize,
    pub late_night_launches: usize,
    pub help_uses: usize,
    /// Extra sessions from staff accounts, flagged `is_staff`.
    pub staff_sessions: usize,
    pub weeks: u32,
    pub term_start: NaiveDate,
    pub tz: Tz,
}

impl SyntheticLogSpec {
    /// A seven-week term with the aggregates of the first large deployment:
    /// 959 students, 11,222 launched sessions, 17,982 responses, one in
    /// eight created sessions never opened, 44% of launches in business
    /// hours and 10% between midnight and 6am. Sessions with follow-up
    /// dialogue: 1,969 compile-time and 899 run-time.
    pub fn reported_cohort() -> Self {
        let launched = 11_222;
        let never = 1_603; // 1603 / (11222 + 1603) = 12.50%
        Self {
            users: 959,
            launched_sessions: launched,
            never_visited_sessions: never,
            compile_time_sessions: 8_674, // 1969 / 8674 = 22.7%
            compile_time_multi: 1_969,
            run_time_multi: 899, // 899 / 2548 = 35.3%
            total_inferences: 17_982,
            business_hours_launches: 4_938, // 44.0%
            late_night_launches: 1_122,     // 10.0%
            help_uses: 5_000,
            staff_sessions: 40,
            weeks: 7,
            term_start: NaiveDate::from_ymd_opt(2024, 2, 12).unwrap(),
            tz: chrono_tz::Australia::Sydney,
        }
    }

    fn check(&self) {
        let run = self.launched_sessions - self.compile_time_sessions;
        let multi = self.compile_time_multi + self.run_time_multi;
        assert!(self.users >= 1 && self.users <= self.launched_sessions, "every user needs a launched session");
        assert!(self.compile_time_multi <= self.compile_time_sessions && self.run_time_multi <= run);
        assert!(
            self.total_inferences >= self.launched_sessions + multi,
            "each launch needs an initial inference and each multi-inference session a follow-up"
        );
        assert!(self.business_hours_launches + self.late_night_launches <= self.launched_sessions);
        assert!(self.weeks >= 1);
    }
}

#[derive(Clone, Copy)]
enum HourBand {
    Business,
    LateNight,
    OtherOutOfHours,
}

/// Builds the event log described by `spec`, ordered by timestamp.
///
/// # Panics
/// If the requested aggregates are mutually inconsistent.
pub fn generate(spec: &SyntheticLogSpec, seed: u64) -> Vec<UsageEvent> {
    spec.check();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let launched = spec.launched_sessions;

    // owners: everyone gets one launch, the rest are spread at random
    let mut owners: Vec<usize> = (0..spec.users).collect();
    owners.extend((spec.users..launched).map(|_| rng.random_range(0..spec.users)));
    owners.shuffle(&mut rng);

    let mut kinds: Vec<ErrorKind> = (0..launched)
        .map(|i| if i < spec.compile_time_sessions { ErrorKind::CompileTime } else { ErrorKind::RunTime })
        .collect();
    kinds.shuffle(&mut rng);

    // multi-inference flags per kind
    let mut multi = vec![false; launched];
    for (kind, count) in [(ErrorKind::CompileTime, spec.compile_time_multi), (ErrorKind::RunTime, spec.run_time_multi)] {
        let mut idx: Vec<usize> = (0..launched).filter(|&i| kinds[i] == kind).collect();
        idx.shuffle(&mut rng);
        for &i in idx.iter().take(count) {
            multi[i] = true;
        }
    }

    // follow-ups: one per multi session, remainder spread over them
    let mut followups = vec![0usize; launched];
    let multi_idx: Vec<usize> = (0..launched).filter(|&i| multi[i]).collect();
    for &i in &multi_idx {
        followups[i] = 1;
    }
    let extra = spec.total_inferences - launched - multi_idx.len();
    if !multi_idx.is_empty() {
        for _ in 0..extra {
            followups[multi_idx[rng.random_range(0..multi_idx.len())]] += 1;
        }
    }

    let mut bands: Vec<HourBand> = (0..launched)
        .map(|i| {
            if i < spec.business_hours_launches {
                HourBand::Business
            } else if i < spec.business_hours_launches + spec.late_night_launches {
                HourBand::LateNight
            } else {
                HourBand::OtherOutOfHours
            }
        })
        .collect();
    bands.shuffle(&mut rng);

    let days = i64::from(spec.weeks) * 7;
    let mut events = Vec::with_capacity(launched * 5 + spec.never_visited_sessions + spec.help_uses);
    let owner_id = |u: usize| format!("student-{u:04}");

    for i in 0..launched {
        // run-time errors become more common later in term
        let day = match kinds[i] {
            ErrorKind::CompileTime => rng.random_range(0..days),
            ErrorKind::RunTime => days - 1 - rng.random_range(0..days).min(rng.random_range(0..days)),
        };
        let start = local_time(spec, day, bands[i], &mut rng);
        let token = format!("synthetic-{i:06}");
        let mk = |event_type, ts, is_initial| UsageEvent {
            event_type,
            owner_id: owner_id(owners[i]),
            session_token: Some(token.clone()),
            is_initial,
            error_kind: kinds[i],
            timestamp: ts,
            is_staff: false,
        };
        events.push(mk(EventType::SessionCreated, start - Duration::seconds(20), None));
        events.push(mk(EventType::SessionVisited, start, None));
        events.push(mk(EventType::Inference, start + Duration::seconds(5), Some(true)));
        for f in 0..followups[i] {
            events.push(mk(EventType::Inference, start + Duration::seconds(65 + 60 * f as i64), Some(false)));
        }
    }

    for i in 0..spec.never_visited_sessions {
        let band = [HourBand::Business, HourBand::OtherOutOfHours][rng.random_range(0..2)];
        let ts = local_time(spec, rng.random_range(0..days), band, &mut rng);
        events.push(UsageEvent {
            event_type: EventType::SessionCreated,
            owner_id: owner_id(rng.random_range(0..spec.users)),
            session_token: Some(format!("unvisited-{i:06}")),
            is_initial: None,
            error_kind: if rng.random_bool(0.75) { ErrorKind::CompileTime } else { ErrorKind::RunTime },
            timestamp: ts,
            is_staff: false,
        });
    }

    for _ in 0..spec.help_uses {
        let ts = local_time(spec, rng.random_range(0..days), HourBand::Business, &mut rng);
        events.push(UsageEvent {
            event_type: EventType::HelpUsed,
            owner_id: owner_id(rng.random_range(0..spec.users)),
            session_token: None,
            is_initial: None,
            error_kind: ErrorKind::CompileTime,
            timestamp: ts,
            is_staff: false,
        });
    }

    for i in 0..spec.staff_sessions {
        let ts = local_time(spec, rng.random_range(0..days), HourBand::Business, &mut rng);
        let token = format!("staff-{i:04}");
        for (k, (event_type, initial)) in [
            (EventType::SessionCreated, None),
            (EventType::SessionVisited, None),
            (EventType::Inference, Some(true)),
            (EventType::Inference, Some(false)),
        ]
        .into_iter()
        .enumerate()
        {
            events.push(UsageEvent {
                event_type,
                owner_id: format!("tutor-{:02}", i % 3),
                session_token: Some(token.clone()),
                is_initial: initial,
                error_kind: ErrorKind::RunTime,
                timestamp: ts + Duration::seconds(k as i64 * 10),
                is_staff: true,
            });
        }
    }

    events.sort_by_key(|e| e.timestamp);
    events
}

/// A UTC instant on term day `day` whose local hour falls inside `band`.
fn local_time(spec: &SyntheticLogSpec, day: i64, band: HourBand, rng: &mut ChaCha8Rng) -> chrono::DateTime<Utc> {
    const OTHER: [u32; 10] = [6, 7, 8, 17, 18, 19, 20, 21, 22, 23];
    let hour = match band {
        HourBand::Business => rng.random_range(9..17),
        HourBand::LateNight => rng.random_range(0..6),
        HourBand::OtherOutOfHours => OTHER[rng.random_range(0..OTHER.len())],
    };
    // keep clear of the end of the hour so follow-up offsets never matter
    let minute = rng.random_range(0..50);
    let date = spec.term_start + Duration::days(day);
    let naive = date.and_time(NaiveTime::from_hms_opt(hour, minute, rng.random_range(0..60)).unwrap());
    spec.tz
        .from_local_datetime(&naive)
        .earliest()
        .unwrap_or_else(|| spec.tz.from_utc_datetime(&naive))
        .with_timezone(&Utc)
}
