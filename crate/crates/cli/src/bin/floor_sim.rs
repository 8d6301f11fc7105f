use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use edu_cli::floor::{parse_script, run, Mode, RunOptions, EXIT_PARSE};

/// Simulated interactive floor: sends segment presses to the hub.
#[derive(Parser, Debug)]
#[command(name = "floor-sim", version)]
struct Args {
    /// Hub WebSocket URL.
    #[arg(long, default_value = "ws://127.0.0.1:8080/ws")]
    hub: String,

    /// Press script to run.
    #[arg(long, conflicts_with = "interactive")]
    script: Option<PathBuf>,

    /// Read keys 1-4 from stdin (default when no script is given).
    #[arg(long)]
    interactive: bool,
}

#[tokio::main]
async fn main() -> ExitCode {
    let args = Args::parse();
    let mode = match &args.script {
        Some(path) => {
            let text = match std::fs::read_to_string(path) {
                Ok(text) => text,
                Err(e) => {
                    eprintln!("floor-sim: {}: {e}", path.display());
                    return ExitCode::from(EXIT_PARSE as u8);
                }
            };
            match parse_script(&text) {
                Ok(script) => Mode::Script(script),
                Err(e) => {
                    eprintln!("floor-sim: {}: {e}", path.display());
                    return ExitCode::from(EXIT_PARSE as u8);
                }
            }
        }
        None => Mode::Interactive,
    };

    let report = run(mode, &RunOptions::new(args.hub)).await;
    if let Err(e) = &report.result {
        eprintln!("floor-sim: {e}");
    }
    ExitCode::from(report.exit_code() as u8)
}
