//! Random societies (polymatrix games over random neighbor graphs) and
//! seeded batch experiments over them.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::best_response_dynamics;
use crate::dynamics::{run, DynamicsConfig, SelfishnessLevels};
use crate::error::{Error, Result};
use crate::game::{Game, PolymatrixGame};

/// How the two directions of a neighbor relation get their tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TableMode {
    /// `f_ij` and `f_ji` are drawn independently.
    #[default]
    IndependentDirected,
    /// One table per relation: `f_ji(x_j, x_i) = f_ij(x_i, x_j)`.
    SharedSymmetric,
}

impl FromStr for TableMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "independent" | "independent-directed" => Ok(TableMode::IndependentDirected),
            "shared" | "shared-symmetric" | "symmetric" => Ok(TableMode::SharedSymmetric),
            _ => Err(Error::InvalidSpec(format!("unknown table mode {s:?}"))),
        }
    }
}

/// Parameters of a random society.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SocietySpec {
    pub population: usize,
    pub actions_per_player: usize,
    pub average_neighbors: f64,
    #[serde(default)]
    pub table_mode: TableMode,
    #[serde(default)]
    pub seed: u64,
    /// Redraw the neighbor graph until nobody is isolated.
    #[serde(default = "default_true")]
    pub avoid_isolated: bool,
}

fn default_true() -> bool {
    true
}

/// Edge-set redraws allowed when avoiding isolated individuals.
const MAX_GRAPH_ATTEMPTS: usize = 10_000;

impl SocietySpec {
    pub fn new(population: usize, actions_per_player: usize, average_neighbors: f64, seed: u64) -> Self {
        Self {
            population,
            actions_per_player,
            average_neighbors,
            table_mode: TableMode::default(),
            seed,
            avoid_isolated: true,
        }
    }

    pub fn with_table_mode(mut self, mode: TableMode) -> Self {
        self.table_mode = mode;
        self
    }

    pub fn with_avoid_isolated(mut self, on: bool) -> Self {
        self.avoid_isolated = on;
        self
    }

    /// Number of undirected neighbor relations, `round(n * k / 2)`.
    pub fn edge_count(&self) -> usize {
        (self.population as f64 * self.average_neighbors / 2.0).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.population;
        if n < 2 {
            return Err(Error::InvalidSpec(format!("population must be at least 2, got {n}")));
        }
        if self.actions_per_player == 0 {
            return Err(Error::InvalidSpec("players need at least one action".into()));
        }
        let k = self.average_neighbors;
        if !(k.is_finite() && k >= 0.0 && k <= (n - 1) as f64) {
            return Err(Error::InvalidSpec(format!(
                "average neighbor count {k} outside [0, {}]",
                n - 1
            )));
        }
        let edges = self.edge_count();
        if edges > n * (n - 1) / 2 {
            return Err(Error::InvalidSpec(format!("{edges} edges exceed the complete graph")));
        }
        if self.avoid_isolated && edges > 0 && 2 * edges < n {
            return Err(Error::InvalidSpec(format!(
                "{edges} edges cannot cover {n} individuals; disable avoid_isolated to allow isolated players"
            )));
        }
        Ok(())
    }
}

/// Maps a pair index in `0..n(n-1)/2` to `(i, j)` with `i < j`.
fn decode_pair(mut index: usize, n: usize) -> (usize, usize) {
    let mut i = 0;
    loop {
        let row = n - 1 - i;
        if index < row {
            return (i, i + 1 + index);
        }
        index -= row;
        i += 1;
    }
}

/// Samples `round(n k / 2)` distinct undirected pairs uniformly.
fn sample_edges(spec: &SocietySpec, rng: &mut ChaCha8Rng) -> Result<Vec<(usize, usize)>> {
    let n = spec.population;
    let total = n * (n - 1) / 2;
    let count = spec.edge_count();
    for _ in 0..MAX_GRAPH_ATTEMPTS {
        let mut pairs: Vec<(usize, usize)> = rand::seq::index::sample(rng, total, count)
            .into_iter()
            .map(|k| decode_pair(k, n))
            .collect();
        pairs.sort_unstable();
        if !spec.avoid_isolated || count == 0 {
            return Ok(pairs);
        }
        let mut degree = vec![0usize; n];
        for &(i, j) in &pairs {
            degree[i] += 1;
            degree[j] += 1;
        }
        if degree.iter().all(|&d| d > 0) {
            return Ok(pairs);
        }
    }
    Err(Error::InvalidSpec(format!(
        "no graph without isolated individuals after {MAX_GRAPH_ATTEMPTS} draws"
    )))
}

/// Draws a society: a uniform random neighbor graph with `round(n k / 2)`
/// relations and pairwise tables with entries uniform on `[0, 1)`.
pub fn generate_society(spec: &SocietySpec) -> Result<PolymatrixGame> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let pairs = sample_edges(spec, &mut rng)?;
    let m = spec.actions_per_player;
    let mut game = PolymatrixGame::new(vec![m; spec.population])?;
    let draw = |rng: &mut ChaCha8Rng| (0..m * m).map(|_| rng.random::<f64>()).collect::<Vec<f64>>();
    for (i, j) in pairs {
        let forward = draw(&mut rng);
        let backward = match spec.table_mode {
            TableMode::IndependentDirected => draw(&mut rng),
            TableMode::SharedSymmetric => transpose(&forward, m),
        };
        game.add_edge(i, j, forward)?;
        game.add_edge(j, i, backward)?;
    }
    Ok(game)
}

fn transpose(t: &[f64], m: usize) -> Vec<f64> {
    (0..m * m).map(|k| t[(k % m) * m + k / m]).collect()
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Mean and population variance of a sample of overall payoffs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchStats {
    pub samples: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
}

impl BatchStats {
    pub fn from_samples(samples: Vec<f64>) -> Self {
        let count = samples.len();
        if count == 0 {
            return Self {
                samples,
                mean: f64::NAN,
                variance: f64::NAN,
            };
        }
        let mut s = CompensatedSum::default();
        samples.iter().for_each(|&x| s.add(x));
        let mean = s.total() / count as f64;
        let mut v = CompensatedSum::default();
        samples.iter().for_each(|&x| v.add((x - mean) * (x - mean)));
        Self {
            variance: v.total() / count as f64,
            samples,
            mean,
        }
    }
}

/// Solver used for each run of a batch.
#[derive(Debug, Clone, PartialEq)]
pub enum BatchMethod {
    /// Power-response dynamics; each run's seed replaces `config.seed`.
    Dynamics(DynamicsConfig),
    BestResponse {
        max_rounds: usize,
    },
}

/// Summary of one run in a batch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub converged: bool,
    pub iterations: usize,
    pub overall_payoff: f64,
    pub payoffs: Vec<f64>,
    /// Fixed-point residual; absent for best response.
    pub eq2_residual: Option<f64>,
    pub nash_gap: Option<f64>,
}

/// All runs of a batch plus statistics over the converged ones.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchReport {
    pub records: Vec<RunRecord>,
    pub stats: BatchStats,
    pub failures: usize,
}

impl BatchReport {
    pub fn converged_count(&self) -> usize {
        self.records.len() - self.failures
    }
}

/// Runs `runs` independent seeded solves (seed `base_seed + r` for run `r`).
/// Records are ordered by run index; statistics cover converged runs only.
pub fn batch_run(
    game: &(impl Game + ?Sized),
    method: &BatchMethod,
    runs: usize,
    base_seed: u64,
) -> Result<BatchReport> {
    if runs == 0 {
        return Err(Error::InvalidParameter("a batch needs at least one run".into()));
    }
    if let BatchMethod::Dynamics(cfg) = method {
        cfg.validate(game)?;
    }
    let records = (0..runs)
        .into_par_iter()
        .map(|r| {
            let seed = base_seed.wrapping_add(r as u64);
            match method {
                BatchMethod::Dynamics(cfg) => {
                    let res = run(game, &cfg.clone().with_seed(seed))?;
                    Ok(RunRecord {
                        run: r,
                        seed,
                        converged: res.converged,
                        iterations: res.iterations,
                        overall_payoff: res.overall_payoff(),
                        eq2_residual: Some(res.eq2_residual),
                        nash_gap: Some(res.nash_gap),
                        payoffs: res.payoffs,
                    })
                }
                BatchMethod::BestResponse { max_rounds } => {
                    let res = best_response_dynamics(game, seed, *max_rounds)?;
                    Ok(RunRecord {
                        run: r,
                        seed,
                        converged: res.converged,
                        iterations: res.rounds,
                        overall_payoff: res.overall_payoff(),
                        eq2_residual: None,
                        nash_gap: res.converged.then_some(0.0),
                        payoffs: res.payoffs,
                    })
                }
            }
        })
        .collect::<Result<Vec<RunRecord>>>()?;
    let samples: Vec<f64> = records
        .iter()
        .filter(|r| r.converged)
        .map(|r| r.overall_payoff)
        .collect();
    let failures = records.len() - samples.len();
    Ok(BatchReport {
        records,
        stats: BatchStats::from_samples(samples),
        failures,
    })
}

/// Selfishness level of a sweep point; `inf` runs best-response dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SweepAlpha {
    Finite(f64),
    Infinite,
}

impl fmt::Display for SweepAlpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepAlpha::Finite(a) => write!(f, "{a}"),
            SweepAlpha::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for SweepAlpha {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") {
            return Ok(SweepAlpha::Infinite);
        }
        let a: f64 = s
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("cannot parse selfishness level {s:?}")))?;
        if a.is_infinite() && a > 0.0 {
            return Ok(SweepAlpha::Infinite);
        }
        if !(a.is_finite() && a >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "selfishness level must be >= 0, got {s}"
            )));
        }
        Ok(SweepAlpha::Finite(a))
    }
}

/// One row of an alpha sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub alpha: SweepAlpha,
    pub report: BatchReport,
}

impl SweepRow {
    pub fn runs(&self) -> usize {
        self.report.records.len()
    }
    pub fn mean(&self) -> f64 {
        self.report.stats.mean
    }
    pub fn variance(&self) -> f64 {
        self.report.stats.variance
    }
}

/// `batch_run` at every level in `alphas`. Finite levels use `template` with
/// its selfishness levels replaced; `inf` uses best response with
/// `br_rounds` rounds.
pub fn alpha_sweep(
    game: &(impl Game + ?Sized),
    alphas: &[SweepAlpha],
    runs: usize,
    base_seed: u64,
    template: &DynamicsConfig,
    br_rounds: usize,
) -> Result<Vec<SweepRow>> {
    if alphas.is_empty() {
        return Err(Error::InvalidParameter("alpha sweep needs at least one level".into()));
    }
    alphas
        .iter()
        .map(|&alpha| {
            let method = match alpha {
                SweepAlpha::Infinite => BatchMethod::BestResponse { max_rounds: br_rounds },
                SweepAlpha::Finite(a) => BatchMethod::Dynamics(DynamicsConfig {
                    alphas: SelfishnessLevels::uniform(game.player_count(), a)?,
                    ..template.clone()
                }),
            };
            Ok(SweepRow {
                alpha,
                report: batch_run(game, &method, runs, base_seed)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;
    use crate::dynamics::Init;
    use crate::game::{overall_payoff, pure_payoff};
    use crate::strategy::StrategyProfile;

    #[test]
    fn pair_decoding_covers_all_pairs() {
        let n = 7;
        let pairs: Vec<_> = (0..n * (n - 1) / 2).map(|k| decode_pair(k, n)).collect();
        let mut expected = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                expected.push((i, j));
            }
        }
        assert_eq!(pairs, expected);
    }

    #[test]
    fn two_person_society() {
        let g = generate_society(&SocietySpec::new(2, 3, 1.0, 4)).unwrap();
        assert_eq!(g.edges(0).len(), 1);
        assert_eq!(g.edges(1).len(), 1);
    }

    #[test]
    fn first_society_shape() {
        let spec = SocietySpec::new(121, 50, 6.0, 7);
        assert_eq!(spec.edge_count(), 363);
        let g = generate_society(&spec).unwrap();
        assert_eq!(g.directed_edge_count(), 2 * 363);
        let mean_degree = g.directed_edge_count() as f64 / 121.0;
        assert!((mean_degree - 6.0).abs() < 1e-12);
        for i in 0..121 {
            assert!(!g.edges(i).is_empty());
        }
    }

    #[test]
    fn empty_society_pays_nothing() {
        let spec = SocietySpec::new(10, 4, 0.0, 1);
        let g = generate_society(&spec).unwrap();
        assert_eq!(g.directed_edge_count(), 0);
        assert_eq!(overall_payoff(&g, &StrategyProfile::uniform(&g)).unwrap(), 0.0);
    }

    #[test]
    fn shared_tables_are_transposes() {
        let spec = SocietySpec::new(8, 3, 3.0, 2).with_table_mode(TableMode::SharedSymmetric);
        let g = generate_society(&spec).unwrap();
        for i in 0..8 {
            for e in g.edges(i) {
                for xi in 0..3 {
                    for xj in 0..3 {
                        let mut joint = vec![0; 8];
                        joint[i] = xi;
                        joint[e.to] = xj;
                        let back = g.edges(e.to).iter().find(|b| b.to == i).unwrap();
                        assert_eq!(e.table[xi * 3 + xj], back.table[xj * 3 + xi]);
                    }
                }
            }
        }
        let _ = pure_payoff(&g, &[0; 8], 0).unwrap();
    }

    #[test]
    fn spec_validation() {
        assert!(SocietySpec::new(1, 2, 0.0, 0).validate().is_err());
        assert!(SocietySpec::new(5, 0, 1.0, 0).validate().is_err());
        assert!(SocietySpec::new(5, 2, 4.5, 0).validate().is_err());
        assert!(SocietySpec::new(5, 2, -1.0, 0).validate().is_err());
        assert!(SocietySpec::new(10, 2, 0.5, 0).validate().is_err());
        assert!(SocietySpec::new(10, 2, 0.5, 0)
            .with_avoid_isolated(false)
            .validate()
            .is_ok());
        assert!(SocietySpec::new(5, 2, 4.0, 0).validate().is_ok());
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = SocietySpec::new(30, 4, 5.0, 99);
        assert_eq!(generate_society(&spec).unwrap(), generate_society(&spec).unwrap());
        let other = SocietySpec { seed: 100, ..spec };
        assert_ne!(
            generate_society(&other).unwrap(),
            generate_society(&SocietySpec::new(30, 4, 5.0, 99)).unwrap()
        );
    }

    #[test]
    fn stats_match_definitions() {
        let s = BatchStats::from_samples(vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert_eq!(s.variance, 1.25);
        let one = BatchStats::from_samples(vec![7.0]);
        assert_eq!(one.variance, 0.0);
    }

    #[test]
    fn single_run_batch_has_zero_variance() {
        let g = builtin::coordination_6x6();
        let cfg = DynamicsConfig::uniform_alpha(2, 1.0)
            .unwrap()
            .with_init(Init::RandomSimplex);
        let r = batch_run(&g, &BatchMethod::Dynamics(cfg), 1, 5).unwrap();
        assert_eq!(r.stats.variance, 0.0);
        assert_eq!(r.records[0].seed, 5);
    }

    #[test]
    fn alpha_zero_sweep_is_uniform_payoff() {
        let g = builtin::coordination_6x6();
        let cfg = DynamicsConfig::uniform_alpha(2, 1.0)
            .unwrap()
            .with_init(Init::RandomSimplex);
        let rows = alpha_sweep(&g, &[SweepAlpha::Finite(0.0)], 5, 0, &cfg, 100).unwrap();
        let expected = overall_payoff(&g, &StrategyProfile::uniform(&g)).unwrap();
        assert!((rows[0].mean() - expected).abs() < 1e-12);
        assert!(rows[0].variance() < 1e-24);
        assert_eq!(rows[0].report.converged_count(), 5);
    }

    #[test]
    fn sweep_alpha_parsing() {
        assert_eq!("inf".parse::<SweepAlpha>().unwrap(), SweepAlpha::Infinite);
        assert_eq!(" 20 ".parse::<SweepAlpha>().unwrap(), SweepAlpha::Finite(20.0));
        assert!("-1".parse::<SweepAlpha>().is_err());
        assert!("x".parse::<SweepAlpha>().is_err());
        assert_eq!(SweepAlpha::Infinite.to_string(), "inf");
        assert_eq!(SweepAlpha::Finite(2.5).to_string(), "2.5");
    }
}
