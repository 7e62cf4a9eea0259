use std::io::stdout;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use tomocume::experiments::{rank_table, run_comparison, run_ratio_figure, run_tables};
use tomocume::io::{read_topology, write_table};
use tomocume::ExperimentConfig;

/// Path-rate estimation from link counts by cumulant matching.
#[derive(Parser)]
#[command(name = "tomocume", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cumulant MSE, averaged normalized MSE and negative-estimate tables.
    Tables {
        #[arg(long)]
        config: PathBuf,
    },
    /// Per-path normalized MSE ratio against exact second-order matching.
    Ratio {
        #[arg(long)]
        config: PathBuf,
    },
    /// Second- versus third-order matching relative to the exact baseline.
    Compare {
        #[arg(long)]
        config: PathBuf,
    },
    /// Row counts and ranks of the reduced systems.
    Rank {
        #[arg(long)]
        topology: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        r: usize,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Tables { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let tables = run_tables(&cfg)?;
            for (name, table) in tables.files() {
                println!("# {name}");
                write_table(stdout().lock(), table)?;
            }
        }
        Command::Ratio { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            write_table(stdout().lock(), &run_ratio_figure(&cfg)?)?;
        }
        Command::Compare { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            write_table(stdout().lock(), &run_comparison(&cfg)?)?;
        }
        Command::Rank { topology, k, r } => {
            let t = read_topology(&topology)?;
            write_table(stdout().lock(), &rank_table(t, k, r)?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
