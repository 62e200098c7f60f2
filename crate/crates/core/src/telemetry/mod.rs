//! Usage logging, source redaction and the usage report.

mod events;
mod hours;
mod metrics;
mod redact;
pub mod synthetic;

pub use events::{read_events, EventSink, EventType, NdjsonEventLog, StaffList, TelemetryError, UsageEvent};
pub use hours::{classify_hours, HourClass, Period};
pub use metrics::{compute_metrics, MetricsConfig, MetricsReport, MultiInference, WeekCount};
pub use redact::redact_source;
