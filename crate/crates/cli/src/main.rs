use std::process::ExitCode;

use clap::Parser;
use evbet_cli::{run, Cli, CliError};

fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("EVBET_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| CliError::Config(format!("EVBET_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let result = init_threads().and_then(|()| run(&cli, &mut stdout.lock()));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("evbet: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
