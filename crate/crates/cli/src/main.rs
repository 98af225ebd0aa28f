//! `gequil`: solve games under tunable selfishness, run baselines, random
//! societies and cooperative optimization, and regenerate experiment data.
//!
//! Exit status is 0 on success, 1 on any error and 2 when a run did not
//! converge.

mod commands;
mod config;
mod output;
mod reproduce;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use commands::{BaselineArgs, CooptArgs, Ctx, Outcome, SocietyArgs, SolveArgs, SweepArgs};
use config::{pick, ExperimentConfig};
use reproduce::ReproduceArgs;

#[derive(Debug, Parser)]
#[command(name = "gequil", version, about = "Generalized equilibria under tunable selfishness")]
struct Cli {
    /// Base random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file for CSV (a directory for `reproduce`); stdout by default.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for batch runs.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// JSON experiment configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the dynamics (or an annealing schedule) once.
    Solve(SolveArgs),
    /// Seeded batches at several selfishness levels.
    Sweep(SweepArgs),
    /// Generate a random society, optionally running a batch on it.
    Society(SocietyArgs),
    /// Best-response dynamics or fictitious play.
    Baseline(BaselineArgs),
    /// Cooperative optimization of a pairwise problem.
    Coopt(CooptArgs),
    /// Regenerate the data for a figure or table.
    Reproduce(ReproduceArgs),
}

fn execute(cli: Cli) -> Result<Outcome> {
    let cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(threads) = pick(&cli.threads, &cfg.threads) {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    }
    let ctx = Ctx {
        seed: pick(&cli.seed, &cfg.seed).unwrap_or(0),
        out: pick(&cli.out, &cfg.out),
        cfg,
    };
    match &cli.command {
        Command::Solve(a) => commands::solve(&ctx, a),
        Command::Sweep(a) => commands::sweep(&ctx, a),
        Command::Society(a) => commands::society(&ctx, a),
        Command::Baseline(a) => commands::baseline(&ctx, a),
        Command::Coopt(a) => commands::coopt_cmd(&ctx, a),
        Command::Reproduce(a) => reproduce::reproduce(&ctx, a).map(|_| Outcome::Done),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::NotConverged) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
