//! Runs a program built by sidekick-cc and captures a crash:
//! `sidekick-run <program> [args...]`.

use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use sidekick_core::capture::{run_with_capture, CaptureConfig, RunOutcome, LAUNCH_HINT};

fn main() -> ExitCode {
    sidekick_cli::init_logging();
    let mut args = std::env::args().skip(1);
    let Some(program) = args.next() else {
        eprintln!("usage: sidekick-run <program> [args...]");
        return ExitCode::from(2);
    };
    let rest: Vec<String> = args.collect();
    // output is forwarded live by the capture itself
    let result = CaptureConfig::from_env().and_then(|cfg| run_with_capture(&cfg, Path::new(&program), &rest, None));
    match result {
        Ok(report) => {
            let mut err = std::io::stderr().lock();
            if matches!(report.outcome, RunOutcome::Failure { .. }) {
                let _ = writeln!(err, "{LAUNCH_HINT}");
            }
            ExitCode::from(report.exit_status.clamp(0, 255) as u8)
        }
        Err(e) => {
            eprintln!("sidekick-run: {e}");
            ExitCode::FAILURE
        }
    }
}
