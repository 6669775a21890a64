//! `qsd`: run trajectory experiments from a TOML configuration and write
//! CSV data plus JSON summaries.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use config::{Experiment, Loaded, Overrides};

#[derive(Parser)]
#[command(name = "qsd", version, about = "Quantum state diffusion under alternating spin measurements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sampled expectation values and eigenstate probabilities of single trajectories.
    Trajectory(Common),
    /// Cumulative phase-plane histogram over an ensemble.
    Density(Common),
    /// Dwell-time statistics of S_z outcomes, optionally over an S_x sweep.
    Dwell(Common),
    /// S_x eigenstate probabilities through one S_x window.
    Cascade(Common),
    /// First-passage times into S_z eigenstates.
    CollapseTime(Common),
    /// Acceptance checks with measured values.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Override a configuration key, e.g. `--set m_x=0.5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn execute(cli: Cli) -> Result<()> {
    let (experiment, common) = match cli.command {
        Command::Trajectory(c) => (Experiment::Trajectory, c),
        Command::Density(c) => (Experiment::Density, c),
        Command::Dwell(c) => (Experiment::Dwell, c),
        Command::Cascade(c) => (Experiment::Cascade, c),
        Command::CollapseTime(c) => (Experiment::CollapseTime, c),
        Command::Validate(c) => (Experiment::Validate, c),
    };
    let overrides = Overrides {
        set: common.set,
        seed: common.seed,
        out: common.out,
        threads: common.threads,
    };
    let (config, _) = Loaded::load(common.config.as_deref(), &overrides)?.resolve(experiment)?;
    if let Some(n) = config.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot configure the thread pool")?;
    }
    commands::run(experiment, &config)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
