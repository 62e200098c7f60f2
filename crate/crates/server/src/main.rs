use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use sidekick_core::llm::backend_from_env;
use sidekick_core::telemetry::redact_source;
use sidekick_server::{router, ServerConfig, SessionService, Store, SystemClock};

#[derive(Parser)]
#[command(version, about = "Session service for the debugging assistant")]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Serve the HTTP API (the default).
    Serve,
    /// Write every usage event as newline-delimited JSON.
    ExportEvents {
        #[arg(long, env = "SIDEKICK_DB_PATH", default_value = "sidekick.db")]
        db: PathBuf,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write every session, with comments stripped from student source,
    /// as newline-delimited JSON.
    ExportSessions {
        #[arg(long, env = "SIDEKICK_DB_PATH", default_value = "sidekick.db")]
        db: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn output(out: Option<PathBuf>) -> std::io::Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(std::io::BufWriter::new(std::fs::File::create(path)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn export_events(db: PathBuf, out: Option<PathBuf>) -> Result<(), Box<dyn std::error::Error>> {
    let store = Store::open(&db, Default::default())?;
    let mut w = output(out)?;
    for ev in store.events()? {
        serde_json::to_writer(&mut w, &ev)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

fn export_sessions(db: PathBuf, out: Option<PathBuf>) -> Result<(), Box<dyn std::error::Error>> {
    let store = Store::open(&db, Default::default())?;
    let mut w = output(out)?;
    for token in store.all_session_tokens()? {
        let Some(mut s) = store.session(&token)? else { continue };
        for f in &mut s.context.source_files {
            f.text = redact_source(&f.text);
        }
        let record = serde_json::json!({
            "token": s.token,
            "owner_id": s.owner_id,
            "created_at": s.created_at,
            "visited": s.visited,
            "context": s.context,
            "turns": s.turns,
        });
        serde_json::to_writer(&mut w, &record)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

async fn serve() -> Result<(), Box<dyn std::error::Error>> {
    let config = ServerConfig::from_env()?;
    let store = Arc::new(Store::open(&config.db_path, config.staff.clone())?);
    let backend = backend_from_env()?;
    let service = Arc::new(SessionService::new(store, backend, Arc::new(SystemClock), config.service.clone()));
    let listener = tokio::net::TcpListener::bind(config.bind).await?;
    tracing::info!(addr = %listener.local_addr()?, db = %config.db_path.display(), "listening");
    axum::serve(listener, router(service))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

#[tokio::main]
async fn main() -> std::process::ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let result = match cli.command.unwrap_or(Command::Serve) {
        Command::Serve => serve().await,
        Command::ExportEvents { db, out } => export_events(db, out),
        Command::ExportSessions { db, out } => export_sessions(db, out),
    };
    match result {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sidekick-server: {e}");
            std::process::ExitCode::FAILURE
        }
    }
}
