//! Preset pipelines that regenerate the experiment data as CSV files.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use gequil::builtin;
use gequil::dynamics::{run, run_annealed_stages, AnnealSchedule, DynamicsConfig, Init, UpdateOrder};
use gequil::game::{Game, PolymatrixGame};
use gequil::society::{
    alpha_sweep, batch_run, generate_society, BatchMethod, BatchReport, SocietySpec, SweepAlpha, TableMode,
};

use crate::commands::{Ctx, DEFAULT_BR_ROUNDS};
use crate::output::{num, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    /// Prisoner's dilemma payoffs against the selfishness level.
    Fig1,
    /// Annealed 5x5 game payoffs against the selfishness level.
    Fig2,
    /// 6x6 coordination batches at alpha 100, 4 and 2.
    #[value(name = "fig3-5", alias = "fig3..5")]
    Fig3To5,
    /// Society batches, best response against the dynamics.
    #[value(name = "fig6-8", alias = "fig6..8")]
    Fig6To8,
    /// Society payoff and variance over a range of selfishness levels.
    Table,
    /// Best of many best-response equilibria against the dynamics average.
    Fig9Scaled,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    #[arg(value_enum)]
    pub figure: Figure,
    /// Runs per batch (default 300).
    #[arg(long)]
    pub runs: Option<usize>,
    /// Best-response runs for fig9-scaled (default 10000).
    #[arg(long)]
    pub br_runs: Option<usize>,
    /// Restrict society presets to these populations (121, 601, 1001).
    #[arg(long, value_delimiter = ',')]
    pub populations: Option<Vec<usize>>,
}

/// Society presets: population, actions, average neighbors, level for the
/// dynamics batch.
pub const SOCIETIES: [(usize, usize, f64, f64); 3] =
    [(121, 50, 6.0, 20.0), (601, 20, 30.0, 20.0), (1001, 10, 50.0, 30.0)];

pub const TABLE_ALPHAS: [SweepAlpha; 9] = [
    SweepAlpha::Infinite,
    SweepAlpha::Finite(100.0),
    SweepAlpha::Finite(80.0),
    SweepAlpha::Finite(60.0),
    SweepAlpha::Finite(50.0),
    SweepAlpha::Finite(40.0),
    SweepAlpha::Finite(30.0),
    SweepAlpha::Finite(20.0),
    SweepAlpha::Finite(10.0),
];

/// Dynamics settings for society batches.
pub fn society_dynamics(players: usize, alpha: f64) -> Result<DynamicsConfig> {
    Ok(DynamicsConfig::uniform_alpha(players, alpha)?
        .with_order(UpdateOrder::Sequential)
        .with_init(Init::RandomSimplex)
        .with_tolerance(1e-8)
        .with_residual_tolerance(1e-5)
        .with_max_iterations(20_000))
}

/// Dynamics settings for the 6x6 batches.
pub fn coordination_dynamics(alpha: f64) -> Result<DynamicsConfig> {
    Ok(DynamicsConfig::uniform_alpha(2, alpha)?
        .with_order(UpdateOrder::Sequential)
        .with_damping(0.5)
        .with_init(Init::RandomUniform))
}

fn out_dir(ctx: &Ctx) -> Result<PathBuf> {
    let dir = ctx.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    Ok(dir)
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

pub fn reproduce(ctx: &Ctx, args: &ReproduceArgs) -> Result<()> {
    let dir = out_dir(ctx)?;
    let runs = args.runs.unwrap_or(300);
    match args.figure {
        Figure::Fig1 => fig1(&dir),
        Figure::Fig2 => fig2(&dir, ctx.seed),
        Figure::Fig3To5 => fig3_5(&dir, runs, ctx.seed),
        Figure::Fig6To8 => fig6_8(&dir, runs, ctx.seed, args.populations.as_deref()),
        Figure::Table => table(&dir, runs, ctx.seed, args.populations.as_deref()),
        Figure::Fig9Scaled => fig9(&dir, runs, args.br_runs.unwrap_or(10_000), ctx.seed),
    }
}

fn fig1(dir: &Path) -> Result<()> {
    let g = builtin::prisoners_dilemma();
    let mut t = Table::create(
        Some(&dir.join("fig1.csv")),
        &strings(&["alpha", "payoff_0", "payoff_1", "converged"]),
    )?;
    for k in 0..=60 {
        let alpha = k as f64 * 0.5;
        let r = run(&g, &DynamicsConfig::uniform_alpha(2, alpha)?)?;
        t.row(&[
            num(alpha),
            num(r.payoffs[0]),
            num(r.payoffs[1]),
            r.converged.to_string(),
        ])?;
    }
    t.finish()
}

fn fig2(dir: &Path, seed: u64) -> Result<()> {
    let shifted = builtin::hard_5x5().shift_positive(1.0)?;
    let config = DynamicsConfig::uniform_alpha(2, 1.0)?
        .with_damping(0.001)
        .with_order(UpdateOrder::Sequential)
        .with_seed(seed);
    let stages = run_annealed_stages(&shifted.game, &AnnealSchedule::default_to(1000.0)?, &config)?;
    let mut t = Table::create(
        Some(&dir.join("fig2.csv")),
        &strings(&["alpha", "payoff_0", "payoff_1", "eq2_residual", "nash_gap", "converged"]),
    )?;
    for r in &stages {
        t.row(&[
            num(r.alphas.as_slice()[0]),
            num(r.payoffs[0] - shifted.offsets[0]),
            num(r.payoffs[1] - shifted.offsets[1]),
            num(r.eq2_residual),
            num(r.nash_gap),
            r.converged.to_string(),
        ])?;
    }
    t.finish()
}

fn fig3_5(dir: &Path, runs: usize, seed: u64) -> Result<()> {
    let g = builtin::coordination_6x6_symmetric();
    let mut samples = Table::create(
        Some(&dir.join("fig3_5_runs.csv")),
        &strings(&["alpha", "run", "seed", "converged", "payoff_0", "payoff_1", "overall"]),
    )?;
    let mut summary = Table::create(
        Some(&dir.join("fig3_5_summary.csv")),
        &strings(&[
            "alpha",
            "runs",
            "converged",
            "mean_payoff_0",
            "variance_payoff_0",
            "mean_overall",
            "variance_overall",
        ]),
    )?;
    for alpha in [100.0, 4.0, 2.0] {
        let report = batch_run(&g, &BatchMethod::Dynamics(coordination_dynamics(alpha)?), runs, seed)?;
        let row_player: Vec<f64> = report
            .records
            .iter()
            .filter(|r| r.converged)
            .map(|r| r.payoffs[0])
            .collect();
        let row_stats = gequil::society::BatchStats::from_samples(row_player);
        for r in &report.records {
            samples.row(&[
                num(alpha),
                r.run.to_string(),
                r.seed.to_string(),
                r.converged.to_string(),
                num(r.payoffs[0]),
                num(r.payoffs[1]),
                num(r.overall_payoff),
            ])?;
        }
        summary.row(&[
            num(alpha),
            runs.to_string(),
            report.converged_count().to_string(),
            num(row_stats.mean),
            num(row_stats.variance),
            num(report.stats.mean),
            num(report.stats.variance),
        ])?;
    }
    samples.finish()?;
    summary.finish()
}

/// Society used by the presets. Shared tables make every society a
/// potential game, so best-response dynamics terminate.
pub fn preset_society(population: usize, actions: usize, neighbors: f64, seed: u64) -> Result<PolymatrixGame> {
    Ok(generate_society(
        &SocietySpec::new(population, actions, neighbors, seed).with_table_mode(TableMode::SharedSymmetric),
    )?)
}

fn selected(populations: Option<&[usize]>) -> Vec<(usize, usize, f64, f64)> {
    SOCIETIES
        .into_iter()
        .filter(|s| populations.is_none_or(|p| p.contains(&s.0)))
        .collect()
}

fn write_runs(t: &mut Table, population: usize, alpha: SweepAlpha, report: &BatchReport) -> Result<()> {
    for r in &report.records {
        t.row(&[
            population.to_string(),
            alpha.to_string(),
            r.run.to_string(),
            r.seed.to_string(),
            r.converged.to_string(),
            num(r.overall_payoff),
        ])?;
    }
    Ok(())
}

const RUN_HEADER: [&str; 6] = ["population", "alpha", "run", "seed", "converged", "overall"];
const SUMMARY_HEADER: [&str; 6] = ["population", "alpha", "runs", "converged", "mean", "variance"];

fn summary_row(t: &mut Table, population: usize, alpha: SweepAlpha, report: &BatchReport) -> Result<()> {
    t.row(&[
        population.to_string(),
        alpha.to_string(),
        report.records.len().to_string(),
        report.converged_count().to_string(),
        num(report.stats.mean),
        num(report.stats.variance),
    ])
}

fn fig6_8(dir: &Path, runs: usize, seed: u64, populations: Option<&[usize]>) -> Result<()> {
    let mut summary = Table::create(Some(&dir.join("fig6_8_summary.csv")), &strings(&SUMMARY_HEADER))?;
    for (n, m, k, alpha) in selected(populations) {
        let game = preset_society(n, m, k, seed)?;
        let mut t = Table::create(Some(&dir.join(format!("fig6_8_{n}.csv"))), &strings(&RUN_HEADER))?;
        let br = batch_run(
            &game,
            &BatchMethod::BestResponse {
                max_rounds: DEFAULT_BR_ROUNDS,
            },
            runs,
            seed,
        )?;
        let dynamics = batch_run(&game, &BatchMethod::Dynamics(society_dynamics(n, alpha)?), runs, seed)?;
        write_runs(&mut t, n, SweepAlpha::Infinite, &br)?;
        write_runs(&mut t, n, SweepAlpha::Finite(alpha), &dynamics)?;
        t.finish()?;
        summary_row(&mut summary, n, SweepAlpha::Infinite, &br)?;
        summary_row(&mut summary, n, SweepAlpha::Finite(alpha), &dynamics)?;
    }
    summary.finish()
}

fn table(dir: &Path, runs: usize, seed: u64, populations: Option<&[usize]>) -> Result<()> {
    let mut summary = Table::create(Some(&dir.join("table.csv")), &strings(&SUMMARY_HEADER))?;
    for (n, m, k, _) in selected(populations) {
        let game = preset_society(n, m, k, seed)?;
        let rows = alpha_sweep(
            &game,
            &TABLE_ALPHAS,
            runs,
            seed,
            &society_dynamics(n, 1.0)?,
            DEFAULT_BR_ROUNDS,
        )?;
        for r in &rows {
            summary_row(&mut summary, n, r.alpha, &r.report)?;
        }
    }
    summary.finish()
}

fn fig9(dir: &Path, runs: usize, br_runs: usize, seed: u64) -> Result<()> {
    let (n, m, k, alpha) = SOCIETIES[0];
    let game = preset_society(n, m, k, seed)?;
    let br = batch_run(
        &game,
        &BatchMethod::BestResponse {
            max_rounds: DEFAULT_BR_ROUNDS,
        },
        br_runs,
        seed,
    )?;
    let dynamics = batch_run(
        &game,
        &BatchMethod::Dynamics(society_dynamics(game.player_count(), alpha)?),
        runs,
        seed,
    )?;
    let mut t = Table::create(Some(&dir.join("fig9_scaled.csv")), &strings(&RUN_HEADER))?;
    write_runs(&mut t, n, SweepAlpha::Infinite, &br)?;
    write_runs(&mut t, n, SweepAlpha::Finite(alpha), &dynamics)?;
    t.finish()?;
    let best = br.stats.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = Table::create(
        Some(&dir.join("fig9_scaled_summary.csv")),
        &strings(&[
            "best_response_runs",
            "best_response_best",
            "dynamics_runs",
            "dynamics_mean",
            "dynamics_mean_exceeds_best",
        ]),
    )?;
    s.row(&[
        br.converged_count().to_string(),
        num(best),
        dynamics.converged_count().to_string(),
        num(dynamics.stats.mean),
        (dynamics.stats.mean > best).to_string(),
    ])?;
    s.finish()
}
