//! Drop-in compiler wrapper: `sidekick-cc <compiler flags and files...>`.

use std::io::Write;
use std::process::ExitCode;

use sidekick_core::capture::{wrap_compile, CaptureConfig, CaptureError, CompileOutcome, LAUNCH_HINT};

fn main() -> ExitCode {
    sidekick_cli::init_logging();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let result = CaptureConfig::from_env().and_then(|cfg| wrap_compile(&cfg, &args));
    match result {
        Ok(report) => {
            let _ = std::io::stdout().write_all(&report.stdout);
            let mut err = std::io::stderr().lock();
            let _ = err.write_all(&report.stderr);
            if matches!(report.outcome, CompileOutcome::Failure { .. }) {
                let _ = writeln!(err, "{LAUNCH_HINT}");
            }
            ExitCode::from(report.exit_status.clamp(0, 255) as u8)
        }
        Err(e @ CaptureError::Configuration(_)) => {
            eprintln!("sidekick-cc: {e}");
            ExitCode::from(127)
        }
        Err(e) => {
            eprintln!("sidekick-cc: {e}");
            ExitCode::FAILURE
        }
    }
}
