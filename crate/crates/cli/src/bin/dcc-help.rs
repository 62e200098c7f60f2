//! Prints a one-shot explanation of the last captured error.

use std::process::ExitCode;

use sidekick_cli::{cmd_help, CliEnv};
use sidekick_core::llm::backend_from_env;

#[tokio::main(flavor = "current_thread")]
async fn main() -> ExitCode {
    sidekick_cli::init_logging();
    let env = match CliEnv::from_env() {
        Ok(env) => env,
        Err(e) => {
            eprintln!("dcc-help: {e}");
            return ExitCode::FAILURE;
        }
    };
    let backend = match backend_from_env() {
        Ok(b) => b,
        Err(e) => {
            eprintln!("dcc-help: {e}");
            return ExitCode::FAILURE;
        }
    };
    match cmd_help(&env, backend.as_ref()).await {
        Ok(text) => {
            println!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("dcc-help: {e}");
            ExitCode::FAILURE
        }
    }
}
