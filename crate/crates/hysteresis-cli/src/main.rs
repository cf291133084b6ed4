mod catalog;
mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Outcome;
use crate::config::Config;
use crate::error::CliError;

/// Elasticities, Pigouvian taxes and validation experiments for
/// path-dependent objectives of Brownian motion.
#[derive(Debug, Parser)]
#[command(name = "hysteresis", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML configuration; defaults apply to every missing key.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Print CSV summary lines instead of the report.
    #[arg(long, global = true)]
    summary: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate the elasticity and compare its dynamics with the prediction.
    Elasticity,
    /// Pigouvian tax and optimal policy for a climate functional.
    Climate,
    /// Run acceptance criteria, by name or number, comma separated.
    Verify {
        #[arg(default_value = "all")]
        suite: String,
    },
    /// Observed convergence order over a ladder.
    Convergence,
    /// Exact tree optimum against the first-order-condition solver.
    TreeOracle,
    /// Record-time damages against nested Monte Carlo.
    Tipping,
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    if let Some(k) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let cfg = Config::load(cli.config.as_deref())?;
    std::fs::create_dir_all(&cli.out)?;
    std::fs::write(cli.out.join("config.toml"), cfg.resolved())?;
    std::fs::write(cli.out.join("VERSION"), format!("hysteresis-cli {}\n", env!("CARGO_PKG_VERSION")))?;
    let out = cli.out.as_path();
    let outcome = match &cli.command {
        Command::Elasticity => commands::elasticity_cmd(&cfg, out)?,
        Command::Climate => commands::climate_cmd(&cfg, out)?,
        Command::Verify { suite } => commands::verify_cmd(suite, out)?,
        Command::Convergence => commands::convergence_cmd(&cfg, out)?,
        Command::TreeOracle => commands::tree_cmd(&cfg, out)?,
        Command::Tipping => commands::tipping_cmd(&cfg, out)?,
    };
    std::fs::write(out.join("report.txt"), &outcome.report)?;
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(outcome) => {
            if cli.summary {
                outcome.summary.iter().for_each(|line| println!("{line}"));
            } else {
                print!("{}", outcome.report);
            }
            ExitCode::from(if outcome.passed { 0 } else { 2 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
