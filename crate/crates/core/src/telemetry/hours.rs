use chrono::{DateTime, Timelike, Utc};
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Period {
    Business,
    OutOfHours,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HourClass {
    pub period: Period,
    pub late_night: bool,
}

/// Business hours are local `[09:00, 17:00)`; late night is `[00:00, 06:00)`.
pub fn classify_hours(timestamp: DateTime<Utc>, tz: Tz) -> HourClass {
    let hour = timestamp.with_timezone(&tz).hour();
    HourClass {
        period: if (9..17).contains(&hour) { Period::Business } else { Period::OutOfHours },
        late_night: hour < 6,
    }
}
