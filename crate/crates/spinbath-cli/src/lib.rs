//! Scenario runner: parses a TOML scenario, runs the simulation, writes CSV
//! time series plus a JSON summary, and compares extracted envelopes against
//! the closed-form decay laws.

pub mod compare;
pub mod config;
pub mod csvio;
pub mod runner;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(
    name = "spinbath",
    about = "Exact dynamics of central spins coupled to a spin bath",
    version
)]
pub struct Cli {
    /// Directory for all output files.
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,

    /// Override the bath seed of the scenario file.
    #[arg(long, global = true)]
    pub seed_override: Option<u64>,

    /// Worker thread count (defaults to the number of cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run a scenario configuration and write CSV series plus a summary.
    Run {
        /// Path to the scenario TOML file.
        config: PathBuf,
    },
    /// Extract the envelope of a simulated series and compare it against a
    /// closed-form law.
    Compare {
        /// CSV file produced by `run` (time in the first column).
        csv: PathBuf,
        /// Envelope law: static-quarter, dynamic-half or heisenberg-mf.
        #[arg(long)]
        law: String,
        /// Bath dispersion b^2.
        #[arg(long)]
        b2: f64,
        /// Central field energy (ignored by heisenberg-mf).
        #[arg(long)]
        delta: f64,
        /// Initial amplitude; defaults to the first sample magnitude.
        #[arg(long)]
        sigma0: Option<f64>,
        /// Restrict the comparison to t >= this value.
        #[arg(long)]
        t_min: Option<f64>,
        /// Restrict the comparison to t <= this value.
        #[arg(long)]
        t_max: Option<f64>,
    },
}

pub fn run(cli: Cli) -> Result<()> {
    #[cfg(feature = "parallel")]
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("failed to configure the thread pool")?;
    }
    #[cfg(not(feature = "parallel"))]
    if cli.threads.is_some() {
        eprintln!("note: built without the `parallel` feature; --threads ignored");
    }

    std::fs::create_dir_all(&cli.out_dir)
        .with_context(|| format!("cannot create output directory {:?}", cli.out_dir))?;

    match cli.command {
        Command::Run { config } => {
            let summary = runner::run_scenario_file(&config, &cli.out_dir, cli.seed_override)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(())
        }
        Command::Compare { csv, law, b2, delta, sigma0, t_min, t_max } => {
            let report = compare::compare_file(
                &csv,
                &law,
                b2,
                delta,
                sigma0,
                t_min,
                t_max,
                &cli.out_dir,
            )?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
    }
}
