//! Opens a conversation about the last captured error and prints its link.

use std::process::ExitCode;

use clap::Parser;
use sidekick_cli::{cmd_sidekick, CliEnv};

#[derive(Parser)]
#[command(version, about = "Open a conversation about your last error in the browser")]
struct Args {
    /// Print the result as JSON.
    #[arg(long)]
    json: bool,
}

#[tokio::main(flavor = "current_thread")]
async fn main() -> ExitCode {
    sidekick_cli::init_logging();
    let args = Args::parse();
    let env = match CliEnv::from_env() {
        Ok(env) => env,
        Err(e) => {
            eprintln!("dcc-sidekick: {e}");
            return ExitCode::FAILURE;
        }
    };
    match cmd_sidekick(&env).await {
        Ok(launch) if args.json => {
            println!("{}", serde_json::to_string(&launch).expect("serializable"));
            ExitCode::SUCCESS
        }
        Ok(launch) => {
            println!("Open this link to talk through your error:\n{}", launch.session_url);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("dcc-sidekick: {e}");
            ExitCode::FAILURE
        }
    }
}
