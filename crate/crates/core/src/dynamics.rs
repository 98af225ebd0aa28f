//! Selfishness-parameterized response dynamics.
//!
//! Each player answers the others' current strategies with
//! `p_i(x_i) ∝ Psi_i(x_i)^alpha_i`, optionally blended with its previous
//! strategy (damping). A profile that maps to itself is a generalized
//! equilibrium; `alpha = 0` gives uniform play and `alpha -> inf` recovers
//! best response.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{dot, Game};
use crate::strategy::{linf, MixedStrategy, StrategyProfile};

/// Per-player selfishness levels, each finite and `>= 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct SelfishnessLevels(Vec<f64>);

impl SelfishnessLevels {
    pub fn new(alphas: Vec<f64>) -> Result<Self> {
        if let Some(k) = alphas.iter().position(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "selfishness level of player {k} must be finite and >= 0, got {}",
                alphas[k]
            )));
        }
        Ok(Self(alphas))
    }

    /// The same level for all `players`.
    pub fn uniform(players: usize, alpha: f64) -> Result<Self> {
        Self::new(vec![alpha; players])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The shared level if every player has the same one.
    pub fn common(&self) -> Option<f64> {
        let first = *self.0.first()?;
        self.0.iter().all(|&a| a == first).then_some(first)
    }
}

/// Order in which players update within one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpdateOrder {
    /// Every player responds to the same incoming profile.
    #[default]
    Synchronous,
    /// Players update in index order, each seeing the strategies already
    /// updated earlier in the same iteration.
    Sequential,
}

/// Starting profile of a run.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Init {
    #[default]
    Uniform,
    /// Symmetric Dirichlet(1) per player.
    RandomSimplex,
    /// Independent U(0,1) weights per action, normalized.
    RandomUniform,
    Given(StrategyProfile),
}

impl Init {
    pub fn profile(&self, game: &(impl Game + ?Sized), seed: u64) -> Result<StrategyProfile> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let draw = |rng: &mut ChaCha8Rng, m: usize, exp: bool| {
            let mut w: Vec<f64> = (0..m)
                .map(|_| {
                    if exp {
                        rng.sample::<f64, _>(Exp1)
                    } else {
                        rng.random::<f64>()
                    }
                })
                .collect();
            let s: f64 = w.iter().sum();
            if s > 0.0 {
                w.iter_mut().for_each(|v| *v /= s);
                MixedStrategy::from_normalized(w)
            } else {
                MixedStrategy::uniform(m)
            }
        };
        let counts = game.action_counts();
        Ok(match self {
            Init::Uniform => StrategyProfile::uniform(game),
            Init::RandomSimplex => StrategyProfile::new(counts.iter().map(|&m| draw(&mut rng, m, true)).collect())?,
            Init::RandomUniform => StrategyProfile::new(counts.iter().map(|&m| draw(&mut rng, m, false)).collect())?,
            Init::Given(p) => {
                p.check_for(game)?;
                p.clone()
            }
        })
    }

    pub fn is_random(&self) -> bool {
        matches!(self, Init::RandomSimplex | Init::RandomUniform)
    }
}

/// Parameters of one dynamics run.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsConfig {
    pub alphas: SelfishnessLevels,
    /// Weight of the new response in `lambda * new + (1 - lambda) * old`.
    pub damping: f64,
    /// Stop when the L-infinity profile change of one iteration drops below this.
    pub tolerance: f64,
    /// Largest fixed-point residual accepted as converged.
    pub residual_tolerance: f64,
    pub max_iterations: usize,
    pub init: Init,
    pub seed: u64,
    pub order: UpdateOrder,
    /// Keep the per-iteration step sizes in the result.
    pub record_trace: bool,
}

impl DynamicsConfig {
    pub fn new(alphas: SelfishnessLevels) -> Self {
        Self {
            alphas,
            damping: 1.0,
            tolerance: 1e-10,
            residual_tolerance: 1e-6,
            max_iterations: 100_000,
            init: Init::Uniform,
            seed: 0,
            order: UpdateOrder::Synchronous,
            record_trace: false,
        }
    }

    /// Config with the same `alpha` for all `players`.
    pub fn uniform_alpha(players: usize, alpha: f64) -> Result<Self> {
        Ok(Self::new(SelfishnessLevels::uniform(players, alpha)?))
    }

    pub fn with_damping(mut self, damping: f64) -> Self {
        self.damping = damping;
        self
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_residual_tolerance(mut self, tolerance: f64) -> Self {
        self.residual_tolerance = tolerance;
        self
    }

    pub fn with_max_iterations(mut self, n: usize) -> Self {
        self.max_iterations = n;
        self
    }

    pub fn with_init(mut self, init: Init) -> Self {
        self.init = init;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_order(mut self, order: UpdateOrder) -> Self {
        self.order = order;
        self
    }

    pub fn with_trace(mut self, on: bool) -> Self {
        self.record_trace = on;
        self
    }

    pub fn validate(&self, game: &(impl Game + ?Sized)) -> Result<()> {
        if self.alphas.len() != game.player_count() {
            return Err(Error::InvalidParameter(format!(
                "{} selfishness levels for {} players",
                self.alphas.len(),
                game.player_count()
            )));
        }
        check_damping(self.damping)?;
        for (name, v) in [
            ("tolerance", self.tolerance),
            ("residual tolerance", self.residual_tolerance),
        ] {
            if !(v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("max_iterations must be positive".into()));
        }
        for player in 0..game.player_count() {
            let value = game.min_utility(player);
            if !(value > 0.0) {
                return Err(Error::NonPositiveUtility { player, value });
            }
        }
        Ok(())
    }
}

fn check_damping(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "damping must lie in (0, 1], got {lambda}"
        )));
    }
    Ok(())
}

/// Outcome of a dynamics run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumResult {
    pub profile: StrategyProfile,
    pub payoffs: Vec<f64>,
    pub nash_gap: f64,
    pub eq2_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Selfishness levels the final profile was computed with.
    pub alphas: SelfishnessLevels,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<f64>>,
}

impl EquilibriumResult {
    pub fn overall_payoff(&self) -> f64 {
        self.payoffs.iter().sum()
    }
}

/// Normalizes `psi^alpha` in the log domain into `out`. On a non-positive
/// entry returns its index and value.
fn power_response(psi: &[f64], alpha: f64, out: &mut [f64]) -> std::result::Result<(), (usize, f64)> {
    if let Some(k) = psi.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
        return Err((k, psi[k]));
    }
    if alpha == 0.0 {
        out.fill(1.0 / psi.len() as f64);
        return Ok(());
    }
    let mut top = f64::NEG_INFINITY;
    for (o, &v) in out.iter_mut().zip(psi) {
        *o = alpha * v.ln();
        top = top.max(*o);
    }
    let mut sum = 0.0;
    for o in out.iter_mut() {
        *o = (*o - top).exp();
        sum += *o;
    }
    out.iter_mut().for_each(|o| *o /= sum);
    Ok(())
}

/// `psi^alpha`, normalized to a probability vector. `alpha = 0` gives the
/// uniform distribution.
pub fn response_update(psi: &[f64], alpha: f64) -> Result<MixedStrategy> {
    if psi.is_empty() {
        return Err(Error::Shape("empty action payoff vector".into()));
    }
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "selfishness level must be finite and >= 0, got {alpha}"
        )));
    }
    let mut out = vec![0.0; psi.len()];
    power_response(psi, alpha, &mut out).map_err(|(action, value)| Error::NonPositivePayoff {
        player: None,
        action,
        value,
    })?;
    Ok(MixedStrategy::from_normalized(out))
}

/// `lambda * p_new + (1 - lambda) * p_old`.
pub fn damped_combine(p_new: &MixedStrategy, p_old: &MixedStrategy, lambda: f64) -> Result<MixedStrategy> {
    check_damping(lambda)?;
    if p_new.len() != p_old.len() {
        return Err(Error::Shape(format!(
            "cannot blend strategies of length {} and {}",
            p_new.len(),
            p_old.len()
        )));
    }
    let mut out = p_old.as_slice().to_vec();
    blend(&mut out, p_new.as_slice(), lambda);
    Ok(MixedStrategy::from_normalized(out))
}

/// In place `old <- lambda * new + (1 - lambda) * old`; returns the largest
/// entry change.
fn blend(old: &mut [f64], new: &[f64], lambda: f64) -> f64 {
    let mut change: f64 = 0.0;
    if lambda == 1.0 {
        for (o, &n) in old.iter_mut().zip(new) {
            change = change.max((n - *o).abs());
            *o = n;
        }
    } else {
        for (o, &n) in old.iter_mut().zip(new) {
            let v = lambda * n + (1.0 - lambda) * *o;
            change = change.max((v - *o).abs());
            *o = v;
        }
    }
    change
}

/// Reusable scratch space for stepping one game.
struct Stepper {
    psi: Vec<f64>,
    targets: Vec<Vec<f64>>,
}

impl Stepper {
    fn new(game: &(impl Game + ?Sized)) -> Self {
        let counts = game.action_counts();
        Self {
            psi: vec![0.0; counts.iter().copied().max().unwrap_or(0)],
            targets: counts.iter().map(|&m| vec![0.0; m]).collect(),
        }
    }

    fn respond(
        game: &(impl Game + ?Sized),
        profile: &StrategyProfile,
        player: usize,
        alpha: f64,
        psi: &mut [f64],
        out: &mut [f64],
    ) -> Result<()> {
        let psi = &mut psi[..out.len()];
        game.action_payoffs_into(profile, player, psi);
        power_response(psi, alpha, out).map_err(|(action, value)| Error::NonPositivePayoff {
            player: Some(player),
            action,
            value,
        })
    }

    /// Advances `profile` by one iteration; returns the L-infinity change.
    fn step(
        &mut self,
        game: &(impl Game + ?Sized),
        profile: &mut StrategyProfile,
        alphas: &[f64],
        damping: f64,
        order: UpdateOrder,
    ) -> Result<f64> {
        let n = game.player_count();
        let mut change: f64 = 0.0;
        match order {
            UpdateOrder::Synchronous => {
                for i in 0..n {
                    Self::respond(game, profile, i, alphas[i], &mut self.psi, &mut self.targets[i])?;
                }
                for (s, t) in profile.strategies_mut().iter_mut().zip(&self.targets) {
                    change = change.max(blend(s.as_mut_slice(), t, damping));
                }
            }
            UpdateOrder::Sequential => {
                for i in 0..n {
                    Self::respond(game, profile, i, alphas[i], &mut self.psi, &mut self.targets[i])?;
                    let s = &mut profile.strategies_mut()[i];
                    change = change.max(blend(s.as_mut_slice(), &self.targets[i], damping));
                }
            }
        }
        Ok(change)
    }
}

/// One iteration of the dynamics from `profile`.
pub fn step(
    game: &(impl Game + ?Sized),
    profile: &StrategyProfile,
    config: &DynamicsConfig,
) -> Result<StrategyProfile> {
    config.validate(game)?;
    profile.check_for(game)?;
    let mut next = profile.clone();
    Stepper::new(game).step(game, &mut next, config.alphas.as_slice(), config.damping, config.order)?;
    Ok(next)
}

fn iterate(
    game: &(impl Game + ?Sized),
    mut profile: StrategyProfile,
    config: &DynamicsConfig,
    iterations: usize,
) -> Result<(StrategyProfile, usize, f64, Option<Vec<f64>>)> {
    let mut stepper = Stepper::new(game);
    let mut trace = config.record_trace.then(Vec::new);
    let mut change = f64::INFINITY;
    let mut done = 0;
    while done < iterations {
        change = stepper.step(
            game,
            &mut profile,
            config.alphas.as_slice(),
            config.damping,
            config.order,
        )?;
        done += 1;
        if let Some(t) = trace.as_mut() {
            t.push(change);
        }
        if change < config.tolerance {
            break;
        }
    }
    Ok((profile, done, change, trace))
}

fn finish(
    game: &(impl Game + ?Sized),
    profile: StrategyProfile,
    config: &DynamicsConfig,
    iterations: usize,
    last_change: f64,
    trace: Option<Vec<f64>>,
) -> Result<EquilibriumResult> {
    let eq2_residual = eq2_residual(game, &profile, &config.alphas)?;
    let nash_gap = nash_gap(game, &profile)?;
    let payoffs = crate::game::expected_payoffs(game, &profile)?;
    Ok(EquilibriumResult {
        converged: last_change < config.tolerance && eq2_residual <= config.residual_tolerance,
        profile,
        payoffs,
        nash_gap,
        eq2_residual,
        iterations,
        alphas: config.alphas.clone(),
        trace,
    })
}

/// Iterates the dynamics until the profile stops moving or the iteration
/// budget runs out. Not converging is reported through `converged`.
pub fn run(game: &(impl Game + ?Sized), config: &DynamicsConfig) -> Result<EquilibriumResult> {
    config.validate(game)?;
    let start = config.init.profile(game, config.seed)?;
    let (profile, iterations, change, trace) = iterate(game, start, config, config.max_iterations)?;
    finish(game, profile, config, iterations, change, trace)
}

/// One stage of an annealing schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnnealStage {
    pub alpha: f64,
    pub iterations: usize,
}

/// Non-empty list of stages with non-decreasing selfishness levels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnealSchedule {
    stages: Vec<AnnealStage>,
}

impl AnnealSchedule {
    pub fn new(stages: Vec<AnnealStage>) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::InvalidParameter("annealing schedule is empty".into()));
        }
        for (k, s) in stages.iter().enumerate() {
            if !(s.alpha.is_finite() && s.alpha >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "stage {k}: alpha {} is not finite and >= 0",
                    s.alpha
                )));
            }
            if s.iterations == 0 {
                return Err(Error::InvalidParameter(format!(
                    "stage {k}: iteration count must be positive"
                )));
            }
            if k > 0 && s.alpha < stages[k - 1].alpha {
                return Err(Error::InvalidParameter(format!(
                    "stage {k}: alpha {} decreases from {}",
                    s.alpha,
                    stages[k - 1].alpha
                )));
            }
        }
        Ok(Self { stages })
    }

    /// `alpha_k = start * ratio^k`, capped at and ending with `target`.
    pub fn geometric(start: f64, ratio: f64, target: f64, iterations: usize) -> Result<Self> {
        if !(start > 0.0 && ratio > 1.0 && target.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "geometric schedule needs start > 0, ratio > 1 and a finite target (got {start}, {ratio}, {target})"
            )));
        }
        let mut stages = Vec::new();
        let mut alpha = start;
        while alpha < target {
            stages.push(AnnealStage { alpha, iterations });
            alpha *= ratio;
        }
        stages.push(AnnealStage {
            alpha: target,
            iterations,
        });
        Self::new(stages)
    }

    /// Default ramp: start 1, ratio 1.25, 2000 iterations per stage.
    pub fn default_to(target: f64) -> Result<Self> {
        Self::geometric(1.0, 1.25, target, 2000)
    }

    /// Replaces the iteration budget of the final stage.
    pub fn with_final_iterations(mut self, iterations: usize) -> Result<Self> {
        if iterations == 0 {
            return Err(Error::InvalidParameter("iteration count must be positive".into()));
        }
        self.stages.last_mut().expect("non-empty").iterations = iterations;
        Ok(self)
    }

    pub fn stages(&self) -> &[AnnealStage] {
        &self.stages
    }

    pub fn final_alpha(&self) -> f64 {
        self.stages.last().expect("non-empty").alpha
    }
}

/// Runs every stage from the previous stage's final profile and returns each
/// stage's result. `config.alphas` is replaced by the stage level for all
/// players; `config.init` seeds the first stage only.
pub fn run_annealed_stages(
    game: &(impl Game + ?Sized),
    schedule: &AnnealSchedule,
    config: &DynamicsConfig,
) -> Result<Vec<EquilibriumResult>> {
    config.validate(game)?;
    let n = game.player_count();
    let mut profile = config.init.profile(game, config.seed)?;
    let mut total = 0;
    let mut results = Vec::with_capacity(schedule.stages.len());
    for stage in &schedule.stages {
        let stage_config = DynamicsConfig {
            alphas: SelfishnessLevels::uniform(n, stage.alpha)?,
            ..config.clone()
        };
        let (next, used, change, trace) = iterate(game, profile, &stage_config, stage.iterations)?;
        total += used;
        let result = finish(game, next, &stage_config, total, change, trace)?;
        profile = result.profile.clone();
        results.push(result);
    }
    Ok(results)
}

/// Anneals along `schedule` and returns the final stage's result.
pub fn run_annealed(
    game: &(impl Game + ?Sized),
    schedule: &AnnealSchedule,
    config: &DynamicsConfig,
) -> Result<EquilibriumResult> {
    Ok(run_annealed_stages(game, schedule, config)?
        .pop()
        .expect("non-empty schedule"))
}

/// Largest L-infinity distance between a player's strategy and its power
/// response to `profile`. Zero exactly at a generalized equilibrium.
pub fn eq2_residual(game: &(impl Game + ?Sized), profile: &StrategyProfile, alphas: &SelfishnessLevels) -> Result<f64> {
    profile.check_for(game)?;
    if alphas.len() != game.player_count() {
        return Err(Error::InvalidParameter(format!(
            "{} selfishness levels for {} players",
            alphas.len(),
            game.player_count()
        )));
    }
    let mut psi = vec![0.0; game.action_counts().iter().copied().max().unwrap_or(0)];
    let mut worst: f64 = 0.0;
    for (i, &alpha) in alphas.as_slice().iter().enumerate() {
        let mut target = vec![0.0; game.action_counts()[i]];
        Stepper::respond(game, profile, i, alpha, &mut psi, &mut target)?;
        worst = worst.max(linf(profile[i].as_slice(), &target));
    }
    Ok(worst)
}

/// `max_{x_i} Psi_i(x_i) - sum_{x_i} p_i(x_i) Psi_i(x_i)` for every player.
pub fn player_gaps(game: &(impl Game + ?Sized), profile: &StrategyProfile) -> Result<Vec<f64>> {
    profile.check_for(game)?;
    Ok((0..game.player_count())
        .map(|i| {
            let mut psi = vec![0.0; game.action_counts()[i]];
            game.action_payoffs_into(profile, i, &mut psi);
            let best = psi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (best - dot(profile[i].as_slice(), &psi)).max(0.0)
        })
        .collect())
}

/// Largest gain any player could get by a unilateral deviation.
pub fn nash_gap(game: &(impl Game + ?Sized), profile: &StrategyProfile) -> Result<f64> {
    Ok(player_gaps(game, profile)?.into_iter().fold(0.0, f64::max))
}

/// Upper bound `((m - 1) / e) * psi_max / alpha` on a player's gap at a
/// generalized equilibrium with `alpha >= 1`.
pub fn gap_bound(alpha: f64, actions: usize, psi_max: f64) -> Result<f64> {
    if !(alpha >= 1.0) {
        return Err(Error::Domain(format!("gap bound needs alpha >= 1, got {alpha}")));
    }
    if actions == 0 {
        return Err(Error::Domain("gap bound needs at least one action".into()));
    }
    Ok((actions - 1) as f64 / std::f64::consts::E * psi_max / alpha)
}
