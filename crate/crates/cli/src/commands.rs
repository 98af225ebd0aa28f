use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use gequil::baselines::{best_response_dynamics, fictitious_play, BaselineProfile};
use gequil::coopt::{self, CoopInit, CoopProblem};
use gequil::dynamics::{run, run_annealed_stages, AnnealSchedule, EquilibriumResult, Init};
use gequil::game::{AnyGame, Game};
use gequil::society::{
    alpha_sweep, batch_run, generate_society, BatchMethod, BatchStats, SocietySpec, SweepAlpha, TableMode,
};
use gequil::strategy::StrategyProfile;

use crate::config::{pick, resolve_game, DynamicsArgs, ExperimentConfig, GameArgs, Method, PreparedGame};
use crate::output::{header, joined, num, opt, Table};

/// Shared state for every subcommand.
pub struct Ctx {
    pub cfg: ExperimentConfig,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

/// How a command finished when it did not fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Done,
    NotConverged,
}

impl Outcome {
    pub fn from_converged(all: bool) -> Self {
        if all {
            Outcome::Done
        } else {
            Outcome::NotConverged
        }
    }
}

pub const DEFAULT_BR_ROUNDS: usize = 10_000;
pub const DEFAULT_FP_ROUNDS: usize = 1_000;

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub game: GameArgs,
    #[command(flatten)]
    pub dynamics: DynamicsArgs,
    /// dynamics (default) or anneal.
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// Same as --method anneal.
    #[arg(long)]
    pub anneal: bool,
    /// Ratio between consecutive annealing levels.
    #[arg(long)]
    pub anneal_ratio: Option<f64>,
    /// Iterations per annealing level.
    #[arg(long)]
    pub anneal_iters: Option<usize>,
    /// With annealing, write one row per level.
    #[arg(long)]
    pub stages: bool,
}

fn alpha_label(r: &EquilibriumResult) -> String {
    match r.alphas.common() {
        Some(a) => num(a),
        None => joined(r.alphas.as_slice()),
    }
}

fn strategies(p: &StrategyProfile) -> Vec<String> {
    p.iter().map(|s| joined(s.as_slice())).collect()
}

pub fn solve(ctx: &Ctx, args: &SolveArgs) -> Result<Outcome> {
    let g = resolve_game(&args.game, &ctx.cfg)?;
    let config = args
        .dynamics
        .build(&ctx.cfg, &g.solved, ctx.seed, None, Init::Uniform)?;
    let method = if args.anneal {
        Method::Anneal
    } else {
        pick(&args.method, &ctx.cfg.method).unwrap_or(Method::Dynamics)
    };
    let results = match method {
        Method::Dynamics => vec![run(&g.solved, &config)?],
        Method::Anneal => {
            let target = config.alphas.common().context("annealing needs a common --alpha")?;
            let schedule = AnnealSchedule::geometric(
                1.0,
                pick(&args.anneal_ratio, &ctx.cfg.anneal_ratio).unwrap_or(1.25),
                target,
                pick(&args.anneal_iters, &ctx.cfg.anneal_iters).unwrap_or(2000),
            )?;
            let all = run_annealed_stages(&g.solved, &schedule, &config)?;
            if args.stages {
                all
            } else {
                all.into_iter().last().into_iter().collect()
            }
        }
        other => bail!("solve runs dynamics or anneal, not {other:?}"),
    };
    let n = g.solved.player_count();
    let mut table = Table::create(
        ctx.out.as_deref(),
        &header(
            &[
                "game",
                "seed",
                "alpha",
                "lambda",
                "iterations",
                "converged",
                "eq2_residual",
                "nash_gap",
            ],
            &[("payoff", n), ("strategy", n)],
        )
        .into_iter()
        .chain(std::iter::once("overall".to_string()))
        .collect::<Vec<_>>(),
    )?;
    for r in &results {
        let payoffs = g.unshift(&r.payoffs);
        let mut row = vec![
            g.label.clone(),
            ctx.seed.to_string(),
            alpha_label(r),
            num(config.damping),
            r.iterations.to_string(),
            r.converged.to_string(),
            num(r.eq2_residual),
            num(r.nash_gap),
        ];
        row.extend(payoffs.iter().map(|&p| num(p)));
        row.extend(strategies(&r.profile));
        row.push(num(payoffs.iter().sum()));
        table.row(&row)?;
    }
    table.finish()?;
    Ok(Outcome::from_converged(results.last().is_some_and(|r| r.converged)))
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub game: GameArgs,
    #[command(flatten)]
    pub dynamics: DynamicsArgs,
    /// Comma-separated selfishness levels; `inf` runs best-response dynamics.
    #[arg(long)]
    pub alphas: Option<String>,
    #[arg(long)]
    pub runs: Option<usize>,
    /// Round budget for best-response runs at `inf`.
    #[arg(long)]
    pub rounds: Option<usize>,
    /// Also write one row per run to this file.
    #[arg(long)]
    pub samples: Option<PathBuf>,
}

pub fn parse_alphas(text: &str) -> Result<Vec<SweepAlpha>> {
    let levels = text
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.parse::<SweepAlpha>().map_err(anyhow::Error::from))
        .collect::<Result<Vec<_>>>()?;
    if levels.is_empty() {
        bail!("no selfishness levels given");
    }
    Ok(levels)
}

fn corrected(stats: &BatchStats, offset: f64) -> BatchStats {
    BatchStats::from_samples(stats.samples.iter().map(|s| s - offset).collect())
}

fn min_max(v: &[f64]) -> (Option<f64>, Option<f64>) {
    if v.is_empty() {
        return (None, None);
    }
    (
        Some(v.iter().copied().fold(f64::INFINITY, f64::min)),
        Some(v.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
    )
}

pub fn sweep(ctx: &Ctx, args: &SweepArgs) -> Result<Outcome> {
    let g = resolve_game(&args.game, &ctx.cfg)?;
    let alphas = parse_alphas(&pick(&args.alphas, &ctx.cfg.alphas).context("no levels given; use --alphas")?)?;
    let runs = pick(&args.runs, &ctx.cfg.runs).unwrap_or(1);
    let rounds = pick(&args.rounds, &ctx.cfg.rounds).unwrap_or(DEFAULT_BR_ROUNDS);
    let template = args
        .dynamics
        .build(&ctx.cfg, &g.solved, ctx.seed, Some(1.0), Init::RandomSimplex)?;
    let rows = alpha_sweep(&g.solved, &alphas, runs, ctx.seed, &template, rounds)?;
    let offset: f64 = g.offsets.iter().sum();
    let mut table = Table::create(
        ctx.out.as_deref(),
        &header(&["alpha", "runs", "converged", "mean", "variance", "min", "max"], &[]),
    )?;
    let mut all = true;
    for r in &rows {
        let stats = corrected(&r.report.stats, offset);
        let (lo, hi) = min_max(&stats.samples);
        all &= r.report.failures == 0;
        table.row(&[
            r.alpha.to_string(),
            r.runs().to_string(),
            r.report.converged_count().to_string(),
            num(stats.mean),
            num(stats.variance),
            opt(lo),
            opt(hi),
        ])?;
    }
    table.finish()?;
    if let Some(path) = &args.samples {
        let mut t = Table::create(
            Some(path),
            &header(
                &[
                    "alpha",
                    "run",
                    "seed",
                    "converged",
                    "iterations",
                    "overall",
                    "eq2_residual",
                ],
                &[],
            ),
        )?;
        for r in &rows {
            for rec in &r.report.records {
                t.row(&[
                    r.alpha.to_string(),
                    rec.run.to_string(),
                    rec.seed.to_string(),
                    rec.converged.to_string(),
                    rec.iterations.to_string(),
                    num(rec.overall_payoff - offset),
                    opt(rec.eq2_residual),
                ])?;
            }
        }
        t.finish()?;
    }
    Ok(Outcome::from_converged(all))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableModeArg {
    Independent,
    Shared,
}

impl From<TableModeArg> for TableMode {
    fn from(t: TableModeArg) -> Self {
        match t {
            TableModeArg::Independent => TableMode::IndependentDirected,
            TableModeArg::Shared => TableMode::SharedSymmetric,
        }
    }
}

#[derive(Debug, Args)]
pub struct SocietyArgs {
    /// Population.
    #[arg(long)]
    pub n: usize,
    /// Actions per individual.
    #[arg(long)]
    pub m: usize,
    /// Average number of neighbors.
    #[arg(long)]
    pub k: f64,
    #[arg(long, value_enum, default_value = "independent")]
    pub table_mode: TableModeArg,
    /// Keep graphs in which some individual has no neighbor.
    #[arg(long)]
    pub allow_isolated: bool,
    /// Write the generated game as JSON.
    #[arg(long)]
    pub save: Option<PathBuf>,
    /// Run a batch of this many seeded solves and write one row per run.
    #[arg(long)]
    pub runs: Option<usize>,
    /// Use best-response dynamics for the batch instead of --alpha.
    #[arg(long)]
    pub best_response: bool,
    #[arg(long)]
    pub rounds: Option<usize>,
    #[command(flatten)]
    pub dynamics: DynamicsArgs,
}

pub fn society(ctx: &Ctx, args: &SocietyArgs) -> Result<Outcome> {
    let spec = SocietySpec::new(args.n, args.m, args.k, ctx.seed)
        .with_table_mode(args.table_mode.into())
        .with_avoid_isolated(!args.allow_isolated);
    let game = generate_society(&spec)?;
    if let Some(path) = &args.save {
        std::fs::write(path, gequil::format::game_to_json(&AnyGame::Polymatrix(game.clone())))
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    let Some(runs) = pick(&args.runs, &ctx.cfg.runs) else {
        let degrees: Vec<usize> = (0..args.n).map(|i| game.edges(i).len()).collect();
        let mut t = Table::create(
            ctx.out.as_deref(),
            &header(
                &["population", "actions", "relations", "min_degree", "max_degree", "seed"],
                &[],
            ),
        )?;
        t.row(&[
            args.n.to_string(),
            args.m.to_string(),
            (game.directed_edge_count() / 2).to_string(),
            degrees.iter().min().copied().unwrap_or(0).to_string(),
            degrees.iter().max().copied().unwrap_or(0).to_string(),
            ctx.seed.to_string(),
        ])?;
        t.finish()?;
        return Ok(Outcome::Done);
    };
    let (method, alpha) = if args.best_response {
        let rounds = pick(&args.rounds, &ctx.cfg.rounds).unwrap_or(DEFAULT_BR_ROUNDS);
        (BatchMethod::BestResponse { max_rounds: rounds }, SweepAlpha::Infinite)
    } else {
        let c = args
            .dynamics
            .build(&ctx.cfg, &game, ctx.seed, None, Init::RandomSimplex)?;
        let a = c.alphas.common().context("society batches use a common --alpha")?;
        (BatchMethod::Dynamics(c), SweepAlpha::Finite(a))
    };
    let report = batch_run(&game, &method, runs, ctx.seed)?;
    let mut t = Table::create(
        ctx.out.as_deref(),
        &header(&["run", "seed", "alpha", "converged", "iterations", "overall"], &[]),
    )?;
    for r in &report.records {
        t.row(&[
            r.run.to_string(),
            r.seed.to_string(),
            alpha.to_string(),
            r.converged.to_string(),
            r.iterations.to_string(),
            num(r.overall_payoff),
        ])?;
    }
    t.finish()?;
    eprintln!(
        "alpha {alpha}: {} of {} converged, mean {}, variance {}",
        report.converged_count(),
        runs,
        report.stats.mean,
        report.stats.variance
    );
    Ok(Outcome::from_converged(report.failures == 0))
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[command(flatten)]
    pub game: GameArgs,
    /// best-response (default) or fictitious-play.
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// Round budget (best response) or number of rounds (fictitious play).
    #[arg(long)]
    pub rounds: Option<usize>,
    #[arg(long)]
    pub runs: Option<usize>,
}

pub fn baseline(ctx: &Ctx, args: &BaselineArgs) -> Result<Outcome> {
    let g: PreparedGame = resolve_game(&args.game, &ctx.cfg)?;
    let method = pick(&args.method, &ctx.cfg.method).unwrap_or(Method::BestResponse);
    let runs = pick(&args.runs, &ctx.cfg.runs).unwrap_or(1);
    let n = g.original.player_count();
    let mut t = Table::create(
        ctx.out.as_deref(),
        &header(
            &["run", "seed", "method", "converged", "cycle_detected", "rounds"],
            &[("payoff", n), ("strategy", n)],
        )
        .into_iter()
        .chain(std::iter::once("overall".to_string()))
        .collect::<Vec<_>>(),
    )?;
    let mut all = true;
    for r in 0..runs {
        let seed = ctx.seed.wrapping_add(r as u64);
        let (label, res) = match method {
            Method::BestResponse => (
                "best-response",
                best_response_dynamics(
                    &g.original,
                    seed,
                    pick(&args.rounds, &ctx.cfg.rounds).unwrap_or(DEFAULT_BR_ROUNDS),
                )?,
            ),
            Method::FictitiousPlay => (
                "fictitious-play",
                fictitious_play(
                    &g.original,
                    seed,
                    pick(&args.rounds, &ctx.cfg.rounds).unwrap_or(DEFAULT_FP_ROUNDS),
                )?,
            ),
            other => bail!("baseline runs best-response or fictitious-play, not {other:?}"),
        };
        all &= res.converged;
        let strategy_cells: Vec<String> = match &res.profile {
            BaselineProfile::Pure(p) => p.actions().iter().map(ToString::to_string).collect(),
            BaselineProfile::Mixed(p) => strategies(p),
        };
        let mut row = vec![
            r.to_string(),
            seed.to_string(),
            label.to_string(),
            res.converged.to_string(),
            res.cycle_detected.to_string(),
            res.rounds.to_string(),
        ];
        row.extend(res.payoffs.iter().map(|&p| num(p)));
        row.extend(strategy_cells);
        row.push(num(res.overall_payoff()));
        t.row(&row)?;
    }
    t.finish()?;
    Ok(Outcome::from_converged(all))
}

#[derive(Debug, Args)]
pub struct CooptArgs {
    /// Problem file (JSON).
    #[arg(long, conflicts_with = "random")]
    pub problem: Option<PathBuf>,
    /// Random connected problem: variables,values,extra_edge_probability.
    #[arg(long, value_delimiter = ',', num_args = 1)]
    pub random: Option<Vec<f64>>,
    /// Cooperation strength; overrides the problem file.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Number of runs from random initial states (1 runs from zero).
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Write the problem as JSON.
    #[arg(long)]
    pub save: Option<PathBuf>,
}

/// States closer than this count as the same fixed point.
pub const FIXED_POINT_MATCH: f64 = 1e-6;

pub fn coopt_cmd(ctx: &Ctx, args: &CooptArgs) -> Result<Outcome> {
    let strength = pick(&args.lambda, &ctx.cfg.cooperation_strength);
    let mut problem: CoopProblem = match (&args.random, pick(&args.problem, &ctx.cfg.problem)) {
        (Some(spec), _) => {
            if spec.len() != 3 {
                bail!("--random takes variables,values,extra_edge_probability");
            }
            coopt::random_problem(
                spec[0] as usize,
                spec[1] as usize,
                spec[2],
                strength.unwrap_or(0.9),
                ctx.seed,
            )?
        }
        (None, Some(path)) => coopt::load_problem(&path)?,
        (None, None) => bail!("no problem given; use --problem FILE or --random n,m,p"),
    };
    if let Some(s) = strength {
        problem = problem.with_strength(s)?;
    }
    if let Some(path) = &args.save {
        std::fs::write(path, coopt::problem_to_json(&problem))
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    let restarts = pick(&args.restarts, &ctx.cfg.restarts).unwrap_or(1).max(1);
    let tol = pick(&args.tol, &ctx.cfg.tol).unwrap_or(1e-10);
    let max_iters = pick(&args.max_iters, &ctx.cfg.max_iters).unwrap_or(100_000);
    let mut t = Table::create(
        ctx.out.as_deref(),
        &header(
            &[
                "restart",
                "init",
                "iterations",
                "converged",
                "consensus",
                "objective",
                "assignment",
                "fixed_point",
            ],
            &[],
        ),
    )?;
    let mut classes: Vec<coopt::AssignmentState> = Vec::new();
    let mut all = true;
    for r in 0..restarts {
        let init = if restarts == 1 {
            CoopInit::Zero
        } else {
            CoopInit::Random(ctx.seed.wrapping_add(r as u64))
        };
        let run = coopt::coop_run(&problem, init, tol, max_iters)?;
        all &= run.converged;
        let class = match classes
            .iter()
            .position(|c| c.linf_distance(&run.state) <= FIXED_POINT_MATCH)
        {
            Some(k) => k,
            None => {
                classes.push(run.state.clone());
                classes.len() - 1
            }
        };
        t.row(&[
            r.to_string(),
            match init {
                CoopInit::Zero => "zero".into(),
                CoopInit::Random(s) => format!("random:{s}"),
            },
            run.iterations.to_string(),
            run.converged.to_string(),
            run.solution.is_consensus.to_string(),
            num(run.solution.objective_value),
            joined(&run.solution.assignment),
            class.to_string(),
        ])?;
    }
    t.finish()?;
    eprintln!("distinct fixed points: {}", classes.len());
    Ok(Outcome::from_converged(all))
}
