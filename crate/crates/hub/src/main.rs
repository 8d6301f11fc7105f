use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::Parser;
use edu_hub::{HubConfig, DEFAULT_PASSWORD_ROUNDS};
use tracing_subscriber::EnvFilter;

/// Quiz hub for the interactive floor: WebSocket bridge plus teacher API.
#[derive(Parser, Debug)]
#[command(name = "edu-hub", version)]
struct Args {
    /// Address to listen on.
    #[arg(long, env = "INTERACTIVE_EDU_ADDR", default_value = edu_hub::DEFAULT_LISTEN)]
    listen: SocketAddr,

    /// Store file holding teachers and the question bank.
    #[arg(
        long,
        env = "INTERACTIVE_EDU_STORE",
        default_value = "interactive-edu-store.json"
    )]
    store: PathBuf,

    /// Directory of static files served at `/` (the quiz screen bundle).
    #[arg(long)]
    assets: Option<PathBuf>,

    /// Bearer token lifetime in seconds.
    #[arg(long, default_value_t = 12 * 60 * 60)]
    token_ttl_secs: u64,

    /// PBKDF2 rounds for new password hashes.
    #[arg(long, default_value_t = DEFAULT_PASSWORD_ROUNDS)]
    password_rounds: u32,
}

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .json()
        .with_env_filter(
            EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")),
        )
        .init();

    let args = Args::parse();
    let mut config = HubConfig::new(args.listen, args.store);
    config.assets_dir = args.assets;
    config.token_ttl = Duration::from_secs(args.token_ttl_secs);
    config.password_rounds = args.password_rounds;

    let hub = match edu_hub::start(config).await {
        Ok(hub) => hub,
        Err(e) => {
            tracing::error!(event = "startup_failed", error = %e);
            eprintln!("edu-hub: {e}");
            return ExitCode::FAILURE;
        }
    };

    tokio::select! {
        result = hub.wait() => {
            if let Err(e) = result {
                eprintln!("edu-hub: {e}");
                return ExitCode::FAILURE;
            }
        }
        _ = tokio::signal::ctrl_c() => {
            tracing::info!(event = "shutdown");
        }
    }
    ExitCode::SUCCESS
}
