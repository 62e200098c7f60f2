//! Usage report over a newline-delimited JSON event log.

use std::path::PathBuf;
use std::process::ExitCode;

use chrono::NaiveDate;
use chrono_tz::Tz;
use clap::{Parser, ValueEnum};
use sidekick_core::telemetry::{compute_metrics, read_events, MetricsConfig, StaffList, TelemetryError, UsageEvent};

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Markdown,
}

#[derive(Parser)]
#[command(version, about = "Summarize assistant usage from an event log")]
struct Args {
    /// Event log, one JSON event per line.
    #[arg(long)]
    log: PathBuf,
    /// First day of week 1 (YYYY-MM-DD).
    #[arg(long)]
    term_start: NaiveDate,
    /// IANA time zone for the hour-of-day split, e.g. Australia/Sydney.
    #[arg(long)]
    tz: Tz,
    #[arg(long, value_enum, default_value_t = Format::Markdown)]
    format: Format,
    /// Extra staff ids to drop, one per line, on top of events already flagged.
    #[arg(long)]
    staff: Option<PathBuf>,
}

fn run(args: Args) -> Result<String, Box<dyn std::error::Error>> {
    let staff = args.staff.as_deref().map(StaffList::load).transpose()?.unwrap_or_default();
    let events: Vec<UsageEvent> = read_events(&args.log)?
        .map(|ev| {
            ev.map(|mut e| {
                e.is_staff |= staff.contains(&e.owner_id);
                e
            })
        })
        .collect::<Result<_, TelemetryError>>()?;
    let report = compute_metrics(events, &MetricsConfig { tz: args.tz, term_start: args.term_start });
    Ok(match args.format {
        Format::Json => serde_json::to_string_pretty(&report)?,
        Format::Markdown => report.to_markdown(),
    })
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(out) => {
            println!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("sidekick-metrics: {e}");
            ExitCode::FAILURE
        }
    }
}
