//! `egl`: analytic surfaces and Monte Carlo experiments for vertex
//! classification on errorfully observed graphs.
//!
//! Every subcommand reads one JSON config, writes its artifacts into
//! `--out`, prints progress to standard error, and ends with a
//! one-line machine-readable summary on standard output. Runs are
//! deterministic given (config, seed) regardless of thread count.

mod commands;
mod config;
mod output;

use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::output::OutDir;

#[derive(Parser)]
#[command(
    name = "egl",
    version,
    about = "Vertex-classification error analysis for errorfully observed graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Misclassification surface over the (kappa, tau) grid, its
    /// argmin, and the optimal threshold per kappa.
    Surface(Common),
    /// Observed block-probability path along tau at fixed kappa.
    Path(Common),
    /// Mean and variance of the block-degree signal along tau at
    /// fixed kappa.
    Curves(Common),
    /// Exact and approximate error curves at fixed kappa with the
    /// four optima reported side by side.
    Compare(Common),
    /// Quantity-versus-quality sweep on a labeled graph (loaded
    /// dataset, or a sampled surrogate when no paths are given).
    Celegans(Common),
    /// Monte Carlo misclassification estimate for one classifier at
    /// one design point.
    Simulate(Common),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Surface(_) => "surface",
            Command::Path(_) => "path",
            Command::Curves(_) => "curves",
            Command::Compare(_) => "compare",
            Command::Celegans(_) => "celegans",
            Command::Simulate(_) => "simulate",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Surface(c)
            | Command::Path(c)
            | Command::Curves(c)
            | Command::Compare(c)
            | Command::Celegans(c)
            | Command::Simulate(c) => c,
        }
    }
}

#[derive(Args)]
struct Common {
    /// JSON run configuration (missing fields default to the
    /// demonstration model).
    #[arg(long, value_name = "file.json")]
    config: PathBuf,

    /// Output directory, created if missing.
    #[arg(long, value_name = "dir")]
    out: PathBuf,

    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Overrides the Monte Carlo trial counts (the global count and
    /// the compare embedding count).
    #[arg(long)]
    trials: Option<u64>,

    /// Caps the worker thread pool (default: all cores). Results do
    /// not depend on this.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let common = cli.command.common();
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = common.trials {
        cfg.trials = trials;
        cfg.compare.embedding_trials = trials;
    }
    if let Some(threads) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the thread pool")?;
    }

    let mut out = OutDir::create(&common.out, cfg.digest(), cfg.seed)?;
    match &cli.command {
        Command::Surface(_) => commands::cmd_surface(&cfg, &mut out)?,
        Command::Path(_) => commands::cmd_path(&cfg, &mut out)?,
        Command::Curves(_) => commands::cmd_curves(&cfg, &mut out)?,
        Command::Compare(_) => commands::cmd_compare(&cfg, &mut out)?,
        Command::Celegans(_) => commands::cmd_celegans(&cfg, &mut out)?,
        Command::Simulate(_) => commands::cmd_simulate(&cfg, &mut out)?,
    }
    println!("{}", out.summary(cli.command.name()));
    Ok(())
}
