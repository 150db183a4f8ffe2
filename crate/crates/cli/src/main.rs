//! `singer-kit`: Schwarzian, Minimum Principle and Singer-theorem analyses
//! of interval maps from the command line.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numeric failure.

mod commands;
mod config;
mod output;

use std::fs::File;
use std::io::{self, Write};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::CommandError;
use config::{CommonArgs, RunConfig};
use output::{write_records, Record};

#[derive(Parser)]
#[command(name = "singer-kit", version, about = "Schwarzian derivative and Singer's theorem toolkit for interval maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample S(f^n) on a grid and spot-check the composition law
    Schwarzian(CommonArgs),
    /// Locate extrema of (f^n)' and check the Minimum Principle
    Minprinciple(CommonArgs),
    /// Periodic orbits, immediate basins and the Singer check
    Singer(CommonArgs),
    /// Identity chain at non-vanishing critical points of (f^{n+1})'
    Identity(CommonArgs),
    /// Omega-limit clusters per parameter value (bifurcation data)
    Scan(CommonArgs),
}

fn emit<R: Record>(config: &RunConfig, records: Result<Vec<R>, CommandError>) -> Result<(), CommandError> {
    let records = records?;
    let names = config.parameter_names();
    let result = match &config.out {
        Some(path) => File::create(path).and_then(|f| write_records(f, config.format, &names, &records)),
        None => write_records(io::stdout().lock(), config.format, &names, &records),
    };
    result.map_err(|e| CommandError::Numeric(format!("writing output: {e}")))
}

fn run(cli: Cli) -> Result<(), CommandError> {
    let args = match &cli.command {
        Command::Schwarzian(a)
        | Command::Minprinciple(a)
        | Command::Singer(a)
        | Command::Identity(a)
        | Command::Scan(a) => a,
    };
    let config = RunConfig::from_args(args)?;
    for w in &config.warnings {
        eprintln!("warning: {w}");
    }
    match cli.command {
        Command::Schwarzian(_) => emit(&config, commands::cmd_schwarzian(&config)),
        Command::Minprinciple(_) => emit(&config, commands::cmd_minprinciple(&config)),
        Command::Singer(_) => emit(&config, commands::cmd_singer(&config)),
        Command::Identity(_) => emit(&config, commands::cmd_identity(&config)),
        Command::Scan(_) => emit(&config, commands::cmd_scan(&config)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CommandError::Config(e)) => {
            let _ = writeln!(io::stderr(), "error: {e}");
            ExitCode::from(2)
        }
        Err(CommandError::Numeric(e)) => {
            let _ = writeln!(io::stderr(), "numeric failure: {e}");
            ExitCode::from(3)
        }
    }
}
