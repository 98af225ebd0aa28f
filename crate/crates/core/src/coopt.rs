//! Cooperative optimization of a sum of pairwise objectives.
//!
//! Agent `i` owns variable `x_i` and objective `E_i(x) = sum_j g_ij(x_i, x_j)`
//! over its neighbors. Each iteration every agent recomputes its assignment
//! state
//!
//! ```text
//! psi_i(x_i) <- max over x without x_i of E_i(x) + lambda * sum_{j != i} w_ij psi_j(x_j)
//! ```
//!
//! With `lambda < 1` and a valid propagation matrix the map has exactly one
//! fixed point, and a consensus assignment there maximizes `sum_i E_i`.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::{json_error, read_file, Table};
use crate::game::{for_each_joint, DenseGame};
use crate::strategy::argmax;

/// Tolerance for column sums of the propagation matrix.
pub const COLUMN_SUM_TOLERANCE: f64 = 1e-9;

/// One pairwise term `g_ij`, stored row-major as `m_i x m_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairTerm {
    pub to: usize,
    pub table: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoopProblem {
    domains: Vec<usize>,
    terms: Vec<Vec<PairTerm>>,
    /// Row-major `n x n`; entry `i * n + j` is `w_ij`.
    propagation: Vec<f64>,
    strength: f64,
}

impl CoopProblem {
    /// `terms` lists `(i, j, g_ij)`. Without a propagation matrix the default
    /// one from [`default_propagation`] is used.
    pub fn new(
        domains: Vec<usize>,
        terms: Vec<(usize, usize, Vec<f64>)>,
        propagation: Option<Vec<f64>>,
        strength: f64,
    ) -> Result<Self> {
        let n = domains.len();
        if n == 0 {
            return Err(Error::Shape("a problem needs at least one variable".into()));
        }
        if let Some(i) = domains.iter().position(|&m| m == 0) {
            return Err(Error::Shape(format!("variable {i} has an empty domain")));
        }
        if !(strength.is_finite() && strength >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "cooperation strength must be finite and >= 0, got {strength}"
            )));
        }
        let mut lists: Vec<Vec<PairTerm>> = vec![Vec::new(); n];
        for (k, (i, j, table)) in terms.into_iter().enumerate() {
            if i >= n || j >= n {
                return Err(Error::Shape(format!("term {k} refers to a variable outside 0..{n}")));
            }
            if i == j {
                return Err(Error::Shape(format!("term {k} pairs variable {i} with itself")));
            }
            if lists[i].iter().any(|t| t.to == j) {
                return Err(Error::Shape(format!("duplicate term for agent {i} and variable {j}")));
            }
            if table.len() != domains[i] * domains[j] {
                return Err(Error::Shape(format!(
                    "term ({i}, {j}) has {} entries, expected {}x{}",
                    table.len(),
                    domains[i],
                    domains[j]
                )));
            }
            if let Some(v) = table.iter().find(|v| !v.is_finite()) {
                return Err(Error::Domain(format!("term ({i}, {j}) has non-finite entry {v}")));
            }
            lists[i].push(PairTerm { to: j, table });
        }
        let propagation = match propagation {
            Some(w) => w,
            None => default_propagation_for(&lists),
        };
        validate_propagation(&propagation, n)?;
        Ok(Self {
            domains,
            terms: lists,
            propagation,
            strength,
        })
    }

    pub fn variable_count(&self) -> usize {
        self.domains.len()
    }

    pub fn domains(&self) -> &[usize] {
        &self.domains
    }

    /// Terms of agent `i`'s objective.
    pub fn terms(&self, agent: usize) -> &[PairTerm] {
        &self.terms[agent]
    }

    pub fn strength(&self) -> f64 {
        self.strength
    }

    pub fn with_strength(mut self, strength: f64) -> Result<Self> {
        if !(strength.is_finite() && strength >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "cooperation strength must be finite and >= 0, got {strength}"
            )));
        }
        self.strength = strength;
        Ok(self)
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.propagation[i * self.domains.len() + j]
    }

    pub fn propagation(&self) -> &[f64] {
        &self.propagation
    }

    /// `E_i(x)` for a full assignment.
    pub fn local_objective(&self, agent: usize, x: &[usize]) -> f64 {
        self.terms[agent]
            .iter()
            .map(|t| t.table[x[agent] * self.domains[t.to] + x[t.to]])
            .sum()
    }

    /// `sum_i E_i(x)`.
    pub fn objective(&self, x: &[usize]) -> Result<f64> {
        self.check_assignment(x)?;
        Ok((0..self.domains.len()).map(|i| self.local_objective(i, x)).sum())
    }

    fn check_assignment(&self, x: &[usize]) -> Result<()> {
        if x.len() != self.domains.len() {
            return Err(Error::Shape(format!(
                "assignment has {} values for {} variables",
                x.len(),
                self.domains.len()
            )));
        }
        for (i, (&v, &m)) in x.iter().zip(&self.domains).enumerate() {
            if v >= m {
                return Err(Error::InvalidAction {
                    player: i,
                    action: v,
                    count: m,
                });
            }
        }
        Ok(())
    }
}

fn default_propagation_for(terms: &[Vec<PairTerm>]) -> Vec<f64> {
    let n = terms.len();
    let mut adjacent = vec![false; n * n];
    for (i, list) in terms.iter().enumerate() {
        adjacent[i * n + i] = true;
        for t in list {
            adjacent[i * n + t.to] = true;
            adjacent[t.to * n + i] = true;
        }
    }
    let mut w = vec![0.0; n * n];
    for j in 0..n {
        let count = (0..n).filter(|&i| adjacent[i * n + j]).count() as f64;
        for i in 0..n {
            if adjacent[i * n + j] {
                w[i * n + j] = 1.0 / count;
            }
        }
    }
    w
}

/// Column `j` spreads weight uniformly over `j` and every variable sharing a
/// term with it.
pub fn default_propagation(problem: &CoopProblem) -> Vec<f64> {
    default_propagation_for(&problem.terms)
}

/// Checks that `w` (row-major `n x n`) is non-negative, column-stochastic,
/// irreducible and aperiodic.
pub fn validate_propagation(w: &[f64], n: usize) -> Result<()> {
    if w.len() != n * n {
        return Err(Error::InvalidPropagation(format!(
            "matrix has {} entries, expected {n}x{n}",
            w.len()
        )));
    }
    if let Some(k) = w.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidPropagation(format!(
            "entry ({}, {}) is {}, must be finite and non-negative",
            k / n,
            k % n,
            w[k]
        )));
    }
    for j in 0..n {
        let sum: f64 = (0..n).map(|i| w[i * n + j]).sum();
        if (sum - 1.0).abs() > COLUMN_SUM_TOLERANCE {
            return Err(Error::InvalidPropagation(format!("column {j} sums to {sum}, not 1")));
        }
    }
    let forward: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| w[i * n + j] > 0.0).collect())
        .collect();
    let backward: Vec<Vec<usize>> = (0..n)
        .map(|j| (0..n).filter(|&i| w[i * n + j] > 0.0).collect())
        .collect();
    let (levels, reached) = bfs_levels(&forward);
    if reached < n || bfs_levels(&backward).1 < n {
        return Err(Error::InvalidPropagation("matrix is reducible".into()));
    }
    // Period of a strongly connected graph: gcd of level(u) + 1 - level(v)
    // over all edges u -> v.
    let mut period = 0usize;
    for (u, out) in forward.iter().enumerate() {
        for &v in out {
            period = gcd(period, (levels[u] + 1).abs_diff(levels[v]));
        }
    }
    if period != 1 {
        return Err(Error::InvalidPropagation(format!(
            "matrix is periodic with period {period}"
        )));
    }
    Ok(())
}

fn bfs_levels(adjacency: &[Vec<usize>]) -> (Vec<usize>, usize) {
    let mut level = vec![usize::MAX; adjacency.len()];
    let mut queue = std::collections::VecDeque::from([0]);
    level[0] = 0;
    let mut reached = 1;
    while let Some(u) = queue.pop_front() {
        for &v in &adjacency[u] {
            if level[v] == usize::MAX {
                level[v] = level[u] + 1;
                reached += 1;
                queue.push_back(v);
            }
        }
    }
    (level, reached)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Assignment state functions `psi_i` of every agent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssignmentState {
    pub psi: Vec<Vec<f64>>,
    pub iteration: usize,
}

impl AssignmentState {
    pub fn zeros(problem: &CoopProblem) -> Self {
        Self {
            psi: problem.domains.iter().map(|&m| vec![0.0; m]).collect(),
            iteration: 0,
        }
    }

    pub fn linf_distance(&self, other: &AssignmentState) -> f64 {
        self.psi
            .iter()
            .zip(&other.psi)
            .map(|(a, b)| crate::strategy::linf(a, b))
            .fold(0.0, f64::max)
    }

    /// Per-agent argmax, lowest index on ties.
    pub fn best_assignment(&self) -> Vec<usize> {
        self.psi.iter().map(|p| argmax(p)).collect()
    }

    fn check_for(&self, problem: &CoopProblem) -> Result<()> {
        if self.psi.len() != problem.domains.len() || self.psi.iter().zip(&problem.domains).any(|(p, &m)| p.len() != m)
        {
            return Err(Error::Shape("assignment state does not match the problem".into()));
        }
        if self.psi.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Domain("assignment state has non-finite entries".into()));
        }
        Ok(())
    }
}

/// `lambda * w_ij * max psi_j` summed over agents `j != i` that do not
/// appear in `i`'s objective.
fn detached_sum(problem: &CoopProblem, agent: usize, peaks: &[f64]) -> f64 {
    let n = problem.domains.len();
    let mut attached = vec![false; n];
    attached[agent] = true;
    for t in &problem.terms[agent] {
        attached[t.to] = true;
    }
    (0..n)
        .filter(|&j| !attached[j])
        .map(|j| problem.strength * problem.weight(agent, j) * peaks[j])
        .sum()
}

/// The compromised objective of `agent`, maximized over everything but
/// `x_i`, for each value of `x_i`.
fn compromised_max(problem: &CoopProblem, state: &AssignmentState, agent: usize, peaks: &[f64]) -> Vec<f64> {
    let lambda = problem.strength;
    let detached = detached_sum(problem, agent, peaks);
    let mut out = vec![detached; problem.domains[agent]];
    for t in &problem.terms[agent] {
        let mj = problem.domains[t.to];
        let coupling = lambda * problem.weight(agent, t.to);
        let psi_j = &state.psi[t.to];
        for (o, row) in out.iter_mut().zip(t.table.chunks_exact(mj)) {
            *o += row
                .iter()
                .zip(psi_j)
                .map(|(g, p)| g + coupling * p)
                .fold(f64::NEG_INFINITY, f64::max);
        }
    }
    out
}

fn peaks(state: &AssignmentState) -> Vec<f64> {
    state
        .psi
        .iter()
        .map(|p| p.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect()
}

/// One synchronous update of every agent's assignment state, using the
/// pairwise decomposition of the inner maximization.
pub fn coop_step(problem: &CoopProblem, state: &AssignmentState) -> Result<AssignmentState> {
    state.check_for(problem)?;
    let peaks = peaks(state);
    Ok(AssignmentState {
        psi: (0..problem.domains.len())
            .map(|i| compromised_max(problem, state, i, &peaks))
            .collect(),
        iteration: state.iteration + 1,
    })
}

/// [`coop_step`] by direct maximization over the joint space. Only for
/// problems small enough to enumerate.
pub fn coop_step_exhaustive(problem: &CoopProblem, state: &AssignmentState) -> Result<AssignmentState> {
    state.check_for(problem)?;
    let entries: u128 = problem.domains.iter().map(|&m| m as u128).product();
    if entries > crate::game::MAX_DENSE_ENTRIES {
        return Err(Error::Capacity {
            entries,
            limit: crate::game::MAX_DENSE_ENTRIES,
        });
    }
    let n = problem.domains.len();
    let mut psi: Vec<Vec<f64>> = problem.domains.iter().map(|&m| vec![f64::NEG_INFINITY; m]).collect();
    for_each_joint(&problem.domains, |x| {
        for (i, best) in psi.iter_mut().enumerate() {
            let coupled: f64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| problem.weight(i, j) * state.psi[j][x[j]])
                .sum();
            let value = problem.local_objective(i, x) + problem.strength * coupled;
            if value > best[x[i]] {
                best[x[i]] = value;
            }
        }
    });
    Ok(AssignmentState {
        psi,
        iteration: state.iteration + 1,
    })
}

/// Starting state for [`coop_run`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoopInit {
    Zero,
    /// Uniform entries on `[-s, s)` with `s` one plus the largest objective
    /// magnitude.
    Random(u64),
}

impl CoopInit {
    pub fn state(&self, problem: &CoopProblem) -> AssignmentState {
        match *self {
            CoopInit::Zero => AssignmentState::zeros(problem),
            CoopInit::Random(seed) => {
                let scale = 1.0 + objective_scale(problem);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                AssignmentState {
                    psi: problem
                        .domains
                        .iter()
                        .map(|&m| (0..m).map(|_| rng.random_range(-scale..scale)).collect())
                        .collect(),
                    iteration: 0,
                }
            }
        }
    }
}

fn objective_scale(problem: &CoopProblem) -> f64 {
    problem
        .terms
        .iter()
        .map(|list| {
            list.iter()
                .map(|t| t.table.iter().fold(0.0f64, |a, v| a.max(v.abs())))
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoopSolution {
    pub assignment: Vec<usize>,
    pub is_consensus: bool,
    pub objective_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoopRun {
    pub state: AssignmentState,
    pub solution: CoopSolution,
    pub iterations: usize,
    pub converged: bool,
    /// L-infinity change of the state at each iteration.
    pub steps: Vec<f64>,
}

/// Iterates [`coop_step`] until the state moves less than `tol`.
/// Running out of iterations is reported through `converged`.
pub fn coop_run(problem: &CoopProblem, init: CoopInit, tol: f64, max_iters: usize) -> Result<CoopRun> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let mut state = init.state(problem);
    let mut steps = Vec::new();
    let mut converged = false;
    while steps.len() < max_iters {
        let next = coop_step(problem, &state)?;
        let change = next.linf_distance(&state);
        state = next;
        steps.push(change);
        if change < tol {
            converged = true;
            break;
        }
    }
    let solution = solve(problem, &state)?;
    Ok(CoopRun {
        iterations: steps.len(),
        state,
        solution,
        converged,
        steps,
    })
}

/// Reads the best assignment off a state and checks it for consensus.
pub fn solve(problem: &CoopProblem, state: &AssignmentState) -> Result<CoopSolution> {
    let assignment = state.best_assignment();
    Ok(CoopSolution {
        is_consensus: check_consensus(problem, state, &assignment)?,
        objective_value: problem.objective(&assignment)?,
        assignment,
    })
}

/// True iff, for every agent, `assignment` restricted to the agent's own
/// variables maximizes its compromised objective under `state`.
pub fn check_consensus(problem: &CoopProblem, state: &AssignmentState, assignment: &[usize]) -> Result<bool> {
    state.check_for(problem)?;
    problem.check_assignment(assignment)?;
    let peaks = peaks(state);
    let lambda = problem.strength;
    for i in 0..problem.domains.len() {
        let best = compromised_max(problem, state, i, &peaks)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        let value = detached_sum(problem, i, &peaks)
            + problem.terms[i]
                .iter()
                .map(|t| {
                    t.table[assignment[i] * problem.domains[t.to] + assignment[t.to]]
                        + lambda * problem.weight(i, t.to) * state.psi[t.to][assignment[t.to]]
                })
                .sum::<f64>();
        if value < best - 1e-9 * (1.0 + best.abs()) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Dense game with `u_i(x) = exp((E_i(x) - max E_i) / hbar)`. Power-response
/// dynamics on it realize the soft form of the cooperative update; the
/// per-player offset is a uniform rescaling and does not change them.
pub fn soften_to_game(problem: &CoopProblem, hbar: f64) -> Result<DenseGame> {
    if !(hbar.is_finite() && hbar > 0.0) {
        return Err(Error::InvalidParameter(format!("hbar must be positive, got {hbar}")));
    }
    let objectives = DenseGame::from_fn(problem.domains.clone(), |x, i| problem.local_objective(i, x))?;
    let utilities = (0..problem.domains.len())
        .map(|i| {
            let e = objectives.utilities(i);
            let top = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            e.iter().map(|v| ((v - top) / hbar).exp()).collect()
        })
        .collect();
    DenseGame::new(problem.domains.clone(), utilities)
}

/// Random connected problem: a random spanning tree plus each remaining
/// pair with probability `extra_edge_probability`; both directions of every
/// relation get independent tables uniform on `[0, 1)`.
pub fn random_problem(
    variables: usize,
    values: usize,
    extra_edge_probability: f64,
    strength: f64,
    seed: u64,
) -> Result<CoopProblem> {
    if variables == 0 || values == 0 {
        return Err(Error::InvalidSpec("variables and values must be positive".into()));
    }
    if !(0.0..=1.0).contains(&extra_edge_probability) {
        return Err(Error::InvalidSpec(format!(
            "edge probability {extra_edge_probability} outside [0, 1]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut linked = vec![false; variables * variables];
    let mut pairs = Vec::new();
    for k in 1..variables {
        let parent = rng.random_range(0..k);
        linked[parent * variables + k] = true;
        pairs.push((parent, k));
    }
    for i in 0..variables {
        for j in i + 1..variables {
            if !linked[i * variables + j] && rng.random_bool(extra_edge_probability) {
                pairs.push((i, j));
            }
        }
    }
    let table = |rng: &mut ChaCha8Rng| (0..values * values).map(|_| rng.random::<f64>()).collect::<Vec<f64>>();
    let mut terms = Vec::new();
    for (i, j) in pairs {
        terms.push((i, j, table(&mut rng)));
        terms.push((j, i, table(&mut rng)));
    }
    CoopProblem::new(vec![values; variables], terms, None, strength)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    domains: Vec<usize>,
    cooperation_strength: f64,
    terms: Vec<TermEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    propagation: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermEntry {
    agent: usize,
    other: usize,
    table: Table,
}

/// Parses a problem file:
///
/// ```json
/// {"domains": [2, 3], "cooperation_strength": 0.9,
///  "terms": [{"agent": 0, "other": 1, "table": [[1, 0, 2], [0, 3, 1]]}],
///  "propagation": [[0.5, 0.5], [0.5, 0.5]]}
/// ```
///
/// `propagation` is optional and indexed `[i][j] = w_ij`.
pub fn parse_problem(text: &str) -> Result<CoopProblem> {
    let file: ProblemFile = serde_json::from_str(text).map_err(json_error)?;
    let n = file.domains.len();
    let propagation = match file.propagation {
        None => None,
        Some(rows) => {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(Error::Format(format!("propagation: expected a {n}x{n} matrix")));
            }
            Some(rows.into_iter().flatten().collect())
        }
    };
    for (k, t) in file.terms.iter().enumerate() {
        let expected = (file.domains.get(t.agent), file.domains.get(t.other));
        if let (Some(&a), Some(&b)) = expected {
            if (t.table.rows, t.table.cols) != (a, b) {
                return Err(Error::Format(format!(
                    "terms[{k}] (agent {} other {}): table is {}x{}, expected {a}x{b}",
                    t.agent, t.other, t.table.rows, t.table.cols
                )));
            }
        }
    }
    let terms = file
        .terms
        .into_iter()
        .map(|t| (t.agent, t.other, t.table.flat))
        .collect();
    CoopProblem::new(file.domains, terms, propagation, file.cooperation_strength)
        .map_err(|e| Error::Format(e.to_string()))
}

pub fn load_problem(path: impl AsRef<Path>) -> Result<CoopProblem> {
    let path = path.as_ref();
    parse_problem(&read_file(path)?).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn problem_to_json(problem: &CoopProblem) -> String {
    let n = problem.domains.len();
    let file = ProblemFile {
        domains: problem.domains.clone(),
        cooperation_strength: problem.strength,
        terms: problem
            .terms
            .iter()
            .enumerate()
            .flat_map(|(i, list)| {
                list.iter().map(move |t| TermEntry {
                    agent: i,
                    other: t.to,
                    table: Table {
                        rows: problem.domains[i],
                        cols: problem.domains[t.to],
                        flat: t.table.clone(),
                    },
                })
            })
            .collect(),
        propagation: Some(problem.propagation.chunks(n).map(<[f64]>::to_vec).collect()),
    };
    serde_json::to_string(&file).expect("problem serialization cannot fail")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_variable(g12: Vec<f64>, g21: Vec<f64>, strength: f64) -> CoopProblem {
        CoopProblem::new(vec![2, 2], vec![(0, 1, g12), (1, 0, g21)], None, strength).unwrap()
    }

    #[test]
    fn default_propagation_is_uniform_per_column() {
        let p = two_variable(vec![0.0; 4], vec![0.0; 4], 0.5);
        assert_eq!(p.propagation(), &[0.5, 0.5, 0.5, 0.5]);
        let chain = CoopProblem::new(
            vec![2, 2, 2],
            vec![(0, 1, vec![0.0; 4]), (2, 1, vec![0.0; 4])],
            None,
            0.5,
        )
        .unwrap();
        let third = 1.0 / 3.0;
        assert_eq!(chain.weight(0, 0), 0.5);
        assert_eq!(chain.weight(1, 0), 0.5);
        assert_eq!(chain.weight(2, 0), 0.0);
        assert!((chain.weight(0, 1) - third).abs() < 1e-15);
    }

    #[test]
    fn propagation_validation() {
        assert!(validate_propagation(&[1.0], 1).is_ok());
        // Not column-stochastic.
        assert!(validate_propagation(&[0.5, 0.5, 0.6, 0.5], 2).is_err());
        // Reducible.
        assert!(validate_propagation(&[1.0, 0.0, 0.0, 1.0], 2).is_err());
        // Periodic: a pure swap.
        let err = validate_propagation(&[0.0, 1.0, 1.0, 0.0], 2).unwrap_err();
        assert!(err.to_string().contains("period 2"), "{err}");
        // A three-cycle with one self-loop is aperiodic.
        let w = [0.5, 0.0, 1.0, 0.5, 0.0, 0.0, 0.0, 1.0, 0.0];
        assert!(validate_propagation(&w, 3).is_ok());
        assert!(validate_propagation(&[-0.5, 1.0, 1.5, 0.0], 2).is_err());
        assert!(CoopProblem::new(vec![2, 2], vec![], None, 0.5).is_err());
    }

    #[test]
    fn zero_strength_decouples() {
        let p = two_variable(vec![1.0, 0.0, 0.0, 2.0], vec![3.0, 0.0, 0.0, 1.0], 0.0);
        let mut s = AssignmentState::zeros(&p);
        s.psi = vec![vec![100.0, -100.0], vec![5.0, 7.0]];
        let next = coop_step(&p, &s).unwrap();
        assert_eq!(next.psi, vec![vec![1.0, 2.0], vec![3.0, 1.0]]);
        assert_eq!(next.iteration, 1);
    }

    #[test]
    fn step_matches_hand_computation() {
        let p = two_variable(vec![1.0, 0.0, 0.0, 2.0], vec![0.0, 4.0, 1.0, 0.0], 0.8);
        let mut s = AssignmentState::zeros(&p);
        s.psi = vec![vec![1.0, 0.0], vec![0.0, 2.0]];
        let next = coop_step(&p, &s).unwrap();
        // psi_0(a) = max_b g12(a, b) + 0.4 psi_1(b)
        assert_eq!(next.psi[0], vec![1.0f64.max(0.8), 2.0 + 0.8]);
        // psi_1(b) = max_a g21(b, a) + 0.4 psi_0(a)
        assert_eq!(next.psi[1], vec![(0.4f64).max(4.0), 1.4]);
        assert_eq!(coop_step_exhaustive(&p, &s).unwrap(), next);
    }

    #[test]
    fn zero_objectives_contract_to_zero() {
        let p = two_variable(vec![0.0; 4], vec![0.0; 4], 0.5);
        let r = coop_run(&p, CoopInit::Random(3), 1e-12, 1000).unwrap();
        assert!(r.converged);
        assert!(r.state.psi.iter().flatten().all(|v| v.abs() < 1e-11));
        for w in r.steps.windows(2).skip(1) {
            assert!(w[1] <= 0.5 * w[0] + 1e-15);
        }
    }

    #[test]
    fn single_variable_is_trivial_consensus() {
        let p = CoopProblem::new(vec![3], vec![], None, 0.9).unwrap();
        let r = coop_run(&p, CoopInit::Zero, 1e-9, 10).unwrap();
        assert!(r.converged);
        assert!(r.solution.is_consensus);
        assert_eq!(r.solution.assignment, vec![0]);
        assert_eq!(r.solution.objective_value, 0.0);
    }

    #[test]
    fn mismatched_objectives_without_cooperation() {
        // Agent 0 wants (0, 0); agent 1 wants (1, 1).
        let p = two_variable(vec![5.0, 0.0, 0.0, 1.0], vec![0.0, 0.0, 0.0, 5.0], 0.0);
        let r = coop_run(&p, CoopInit::Zero, 1e-9, 10).unwrap();
        assert_eq!(r.solution.assignment, vec![0, 1]);
        assert!(!r.solution.is_consensus);
    }

    #[test]
    fn identical_objectives_reach_consensus() {
        let g = vec![1.0, 0.2, 0.3, 0.9];
        let p = two_variable(g.clone(), vec![1.0, 0.3, 0.2, 0.9], 0.9);
        let r = coop_run(&p, CoopInit::Zero, 1e-12, 10_000).unwrap();
        assert!(r.converged && r.solution.is_consensus);
        assert_eq!(r.solution.assignment, vec![0, 0]);
        assert!((r.solution.objective_value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn soften_properties() {
        let zero = two_variable(vec![0.0; 4], vec![0.0; 4], 0.5);
        let g = soften_to_game(&zero, 0.1).unwrap();
        assert!(g.utilities(0).iter().chain(g.utilities(1)).all(|&u| u == 1.0));
        let p = two_variable(vec![1.0, 0.0, 3.0, 2.0], vec![0.5, 0.0, 0.0, 1.0], 0.5);
        let g = soften_to_game(&p, 0.5).unwrap();
        let u = g.utilities(0);
        assert_eq!(u[2], 1.0);
        assert!(u[2] > u[3] && u[3] > u[0] && u[0] > u[1]);
        assert!(soften_to_game(&p, 0.0).is_err());
    }

    #[test]
    fn problem_file_round_trip() {
        let p = random_problem(4, 3, 0.5, 0.9, 1).unwrap();
        assert_eq!(parse_problem(&problem_to_json(&p)).unwrap(), p);
        let err = parse_problem(
            r#"{"domains":[2,2],"cooperation_strength":0.5,"terms":[{"agent":0,"other":1,"table":[[1,2,3],[4,5,6]]}]}"#,
        )
        .unwrap_err()
        .to_string();
        assert!(err.contains("terms[0]") && err.contains("expected 2x2"), "{err}");
        let err = parse_problem("{\"domains\":[2,2],\n\"cooperation_strength\":0.5,\n\"terms\":[{\"agent\":0,\"other\":1,\"table\":[[1,2],[3]]}]}")
            .unwrap_err()
            .to_string();
        assert!(err.contains("line 3"), "{err}");
        let err =
            parse_problem(r#"{"domains":[2,2],"cooperation_strength":0.5,"terms":[],"propagation":[[1,0],[0,1]]}"#)
                .unwrap_err()
                .to_string();
        assert!(err.contains("reducible"), "{err}");
    }

    #[test]
    fn random_problems_are_connected_and_deterministic() {
        let a = random_problem(8, 3, 0.2, 0.9, 5).unwrap();
        assert_eq!(a, random_problem(8, 3, 0.2, 0.9, 5).unwrap());
        assert!((0..8).all(|i| !a.terms(i).is_empty()));
    }
}
