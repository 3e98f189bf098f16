mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;
use jpr::JprError;

use args::{Cli, Command};
use commands::Outcome;

fn configure_threads() -> Result<(), JprError> {
    let Ok(raw) = std::env::var("JPR_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().ok().filter(|t| *t > 0).ok_or_else(|| {
        JprError::InvalidConfig(format!(
            "JPR_THREADS must be a positive integer, got '{raw}'"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| {
            JprError::InvalidConfig(format!("cannot set up {threads} worker threads: {e}"))
        })
}

fn run(cli: &Cli) -> Result<Outcome, JprError> {
    configure_threads()?;
    match &cli.command {
        Command::Estimate(a) => commands::estimate(a),
        Command::Bench(a) => commands::bench(a),
        Command::Network(a) => commands::network(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // usage errors share exit code 1 with other input errors
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(1);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match run(&cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::NotConverged {
            iterations,
            residual,
        }) => {
            eprintln!("warning: solver did not converge after {iterations} iterations (residual {residual:.3e}); outputs written");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
