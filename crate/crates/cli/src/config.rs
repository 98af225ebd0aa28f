//! Experiment configuration files and command-line argument groups.
//!
//! A `--config` file is a JSON object whose keys mirror the long flag names
//! (with `_` for `-`). Flags given on the command line win over the file.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use gequil::builtin;
use gequil::dynamics::{DynamicsConfig, Init, SelfishnessLevels, UpdateOrder};
use gequil::game::{AnyGame, Game};
use gequil::society::{generate_society, SocietySpec};
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitKind {
    Uniform,
    /// Dirichlet(1) per player.
    Random,
    /// Independent uniform weights per action, normalized.
    RandomUniform,
}

impl From<InitKind> for Init {
    fn from(k: InitKind) -> Self {
        match k {
            InitKind::Uniform => Init::Uniform,
            InitKind::Random => Init::RandomSimplex,
            InitKind::RandomUniform => Init::RandomUniform,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrderKind {
    Sync,
    Seq,
}

impl From<OrderKind> for UpdateOrder {
    fn from(k: OrderKind) -> Self {
        match k {
            OrderKind::Sync => UpdateOrder::Synchronous,
            OrderKind::Seq => UpdateOrder::Sequential,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Dynamics,
    Anneal,
    BestResponse,
    FictitiousPlay,
    Coopt,
}

/// Contents of a `--config` file. Every key is optional.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub game: Option<String>,
    pub society: Option<SocietySpec>,
    pub method: Option<Method>,
    pub alpha: Option<f64>,
    pub player_alphas: Option<Vec<f64>>,
    pub alphas: Option<String>,
    pub lambda: Option<f64>,
    pub tol: Option<f64>,
    pub residual_tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub init: Option<InitKind>,
    pub order: Option<OrderKind>,
    pub shift: Option<f64>,
    pub no_shift: Option<bool>,
    pub anneal_ratio: Option<f64>,
    pub anneal_iters: Option<usize>,
    pub runs: Option<usize>,
    pub rounds: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub problem: Option<PathBuf>,
    pub cooperation_strength: Option<f64>,
    pub restarts: Option<usize>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
    }
}

/// Command-line value if given, else the config value.
pub fn pick<T: Clone>(cli: &Option<T>, file: &Option<T>) -> Option<T> {
    cli.clone().or_else(|| file.clone())
}

#[derive(Debug, Clone, Default, Args)]
pub struct GameArgs {
    /// Built-in game name (pd, hard5x5, coord6x6, coord6x6sym) or a JSON game file.
    #[arg(long)]
    pub game: Option<String>,
    /// Shift utilities so the smallest becomes this value before solving.
    #[arg(long)]
    pub shift: Option<f64>,
    /// Do not shift hard5x5 automatically.
    #[arg(long)]
    pub no_shift: bool,
}

/// A game ready for the dynamics, with offsets to undo any shift.
pub struct PreparedGame {
    pub label: String,
    pub original: AnyGame,
    pub solved: AnyGame,
    pub offsets: Vec<f64>,
}

impl PreparedGame {
    /// Payoffs of the solved game mapped back to the original utilities.
    pub fn unshift(&self, payoffs: &[f64]) -> Vec<f64> {
        payoffs.iter().zip(&self.offsets).map(|(p, o)| p - o).collect()
    }
}

fn load_named(name: &str) -> Result<AnyGame> {
    Ok(match builtin::by_name(name) {
        Some(g) => AnyGame::Dense(g),
        None => gequil::format::load_game(name)?,
    })
}

/// Loads a game: a built-in name, a file path, or the config's society spec.
pub fn resolve_game(args: &GameArgs, cfg: &ExperimentConfig) -> Result<PreparedGame> {
    let (label, original) = match (&args.game, &cfg.game, &cfg.society) {
        (Some(name), _, _) | (None, Some(name), None) => (name.clone(), load_named(name)?),
        (None, None, Some(spec)) => (
            format!("society-{}", spec.population),
            AnyGame::Polymatrix(generate_society(spec)?),
        ),
        (None, Some(_), Some(_)) => bail!("config gives both \"game\" and \"society\""),
        (None, None, None) => bail!("no game given; use --game NAME|FILE"),
    };
    let no_shift = args.no_shift || cfg.no_shift.unwrap_or(false);
    let shift = match pick(&args.shift, &cfg.shift) {
        Some(eps) if !no_shift => Some(eps),
        Some(_) => None,
        None if label == "hard5x5" && !no_shift => Some(1.0),
        None => None,
    };
    let (solved, offsets) = match shift {
        Some(eps) => {
            let s = original.shift_positive(eps)?;
            (s.game, s.offsets)
        }
        None => (original.clone(), vec![0.0; original.player_count()]),
    };
    Ok(PreparedGame {
        label,
        original,
        solved,
        offsets,
    })
}

#[derive(Debug, Clone, Default, Args)]
pub struct DynamicsArgs {
    /// Common selfishness level.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Per-player selfishness levels, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub player_alphas: Option<Vec<f64>>,
    /// Damping: weight of the new response.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Stop when no probability moves more than this.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Largest fixed-point residual accepted as converged.
    #[arg(long)]
    pub residual_tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long, value_enum)]
    pub init: Option<InitKind>,
    #[arg(long, value_enum)]
    pub order: Option<OrderKind>,
}

impl DynamicsArgs {
    /// Builds a dynamics configuration; `default_alpha` and `default_init`
    /// apply when neither flags nor config set them.
    pub fn build(
        &self,
        cfg: &ExperimentConfig,
        game: &impl Game,
        seed: u64,
        default_alpha: Option<f64>,
        default_init: Init,
    ) -> Result<DynamicsConfig> {
        let n = game.player_count();
        let alphas = match (
            pick(&self.player_alphas, &cfg.player_alphas),
            pick(&self.alpha, &cfg.alpha),
        ) {
            (Some(list), _) => {
                if list.len() != n {
                    bail!("--player-alphas has {} values for {n} players", list.len());
                }
                SelfishnessLevels::new(list)?
            }
            (None, Some(a)) => SelfishnessLevels::uniform(n, a)?,
            (None, None) => match default_alpha {
                Some(a) => SelfishnessLevels::uniform(n, a)?,
                None => bail!("no selfishness level given; use --alpha"),
            },
        };
        let mut c = DynamicsConfig::new(alphas).with_seed(seed);
        if let Some(v) = pick(&self.lambda, &cfg.lambda) {
            c = c.with_damping(v);
        }
        if let Some(v) = pick(&self.tol, &cfg.tol) {
            c = c.with_tolerance(v);
        }
        if let Some(v) = pick(&self.residual_tol, &cfg.residual_tol) {
            c = c.with_residual_tolerance(v);
        }
        if let Some(v) = pick(&self.max_iters, &cfg.max_iters) {
            c = c.with_max_iterations(v);
        }
        c = c.with_init(pick(&self.init, &cfg.init).map(Init::from).unwrap_or(default_init));
        if let Some(v) = pick(&self.order, &cfg.order) {
            c = c.with_order(v.into());
        }
        c.validate(game)?;
        Ok(c)
    }
}
