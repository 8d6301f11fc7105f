use std::process::ExitCode;

use clap::Parser;
use edu_cli::teacher::{execute, Cli};

#[tokio::main]
async fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut stdout = std::io::stdout();
    match execute(cli, &mut stdout).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("edu-teacher: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
