//! Game representations and payoff evaluation.
//!
//! Two representations are supported:
//!
//! * [`DenseGame`] stores one utility table per player over the full joint
//!   action space. Tables are row-major with player 0 varying slowest, so the
//!   flat index of a joint action `(x_0, .., x_{n-1})` is
//!   `((x_0 * m_1 + x_1) * m_2 + x_2) ...`.
//! * [`PolymatrixGame`] stores directed pairwise tables `f_ij` and evaluates
//!   `u_i(x) = sum_{j in N(i)} f_ij(x_i, x_j)`. An undirected relation is two
//!   directed entries, each owned by the player whose payoff it feeds.
//!
//! Everything else in the crate evaluates games through the [`Game`] trait.

use crate::error::{Error, Result};
use crate::strategy::StrategyProfile;

/// Index into a player's action set.
pub type ActionIndex = usize;

/// Maximum number of joint-space entries a dense table may hold.
pub const MAX_DENSE_ENTRIES: u128 = 10_000_000;

/// Common evaluation interface for finite n-player games.
pub trait Game: Send + Sync {
    fn player_count(&self) -> usize;

    fn action_counts(&self) -> &[usize];

    /// Payoff to `player` at a pure joint action. The joint action is assumed
    /// valid; use [`pure_payoff`] for the checked variant.
    fn pure_payoff_unchecked(&self, joint: &[ActionIndex], player: usize) -> f64;

    /// Writes `Psi_i(x_i) = sum_{~x_i} u_i(x) prod_{j != i} p_j(x_j)` into `out`.
    /// Shapes are assumed valid.
    fn action_payoffs_into(&self, profile: &StrategyProfile, player: usize, out: &mut [f64]);

    /// Action payoffs of `player` against the other players' pure actions in
    /// `joint` (the entry for `player` itself is ignored).
    fn pure_action_payoffs_into(&self, joint: &[ActionIndex], player: usize, out: &mut [f64]);

    /// Smallest utility `player` can receive anywhere in the joint space.
    fn min_utility(&self, player: usize) -> f64;

    /// Largest utility `player` can receive anywhere in the joint space.
    fn max_utility(&self, player: usize) -> f64;
}

fn check_joint(counts: &[usize], joint: &[ActionIndex]) -> Result<()> {
    if joint.len() != counts.len() {
        return Err(Error::Shape(format!(
            "joint action has {} entries, game has {} players",
            joint.len(),
            counts.len()
        )));
    }
    for (player, (&action, &count)) in joint.iter().zip(counts).enumerate() {
        if action >= count {
            return Err(Error::InvalidAction { player, action, count });
        }
    }
    Ok(())
}

fn check_player(game: &(impl Game + ?Sized), player: usize) -> Result<()> {
    if player >= game.player_count() {
        return Err(Error::Shape(format!(
            "player {player} out of range for a {}-player game",
            game.player_count()
        )));
    }
    Ok(())
}

/// Checked payoff of `player` at the pure joint action `joint`.
pub fn pure_payoff(game: &(impl Game + ?Sized), joint: &[ActionIndex], player: usize) -> Result<f64> {
    check_player(game, player)?;
    check_joint(game.action_counts(), joint)?;
    Ok(game.pure_payoff_unchecked(joint, player))
}

/// Expected payoff of each of `player`'s pure actions against the other
/// players' mixed strategies.
pub fn action_payoff_vector(game: &(impl Game + ?Sized), profile: &StrategyProfile, player: usize) -> Result<Vec<f64>> {
    check_player(game, player)?;
    profile.check_for(game)?;
    let mut out = vec![0.0; game.action_counts()[player]];
    game.action_payoffs_into(profile, player, &mut out);
    Ok(out)
}

/// `u_i(p) = sum_{x_i} p_i(x_i) Psi_i(x_i)`.
pub fn expected_payoff(game: &(impl Game + ?Sized), profile: &StrategyProfile, player: usize) -> Result<f64> {
    let psi = action_payoff_vector(game, profile, player)?;
    Ok(dot(profile[player].as_slice(), &psi))
}

/// Expected payoff of every player.
pub fn expected_payoffs(game: &(impl Game + ?Sized), profile: &StrategyProfile) -> Result<Vec<f64>> {
    profile.check_for(game)?;
    let mut psi = Vec::new();
    Ok((0..game.player_count())
        .map(|i| {
            psi.resize(game.action_counts()[i], 0.0);
            game.action_payoffs_into(profile, i, &mut psi);
            dot(profile[i].as_slice(), &psi)
        })
        .collect())
}

/// Sum of all players' expected payoffs.
pub fn overall_payoff(game: &(impl Game + ?Sized), profile: &StrategyProfile) -> Result<f64> {
    Ok(expected_payoffs(game, profile)?.iter().sum())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Four independent accumulators let the compiler vectorize.
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in ca.by_ref().zip(cb.by_ref()) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    (acc[0] + acc[2]) + (acc[1] + acc[3]) + tail
}

fn joint_space_size(counts: &[usize]) -> u128 {
    counts.iter().map(|&m| m as u128).product()
}

/// Game stored as full utility tables over the joint action space.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseGame {
    action_counts: Vec<usize>,
    strides: Vec<usize>,
    utilities: Vec<Vec<f64>>,
    positive: bool,
}

impl DenseGame {
    /// Builds a dense game from one flat row-major table per player.
    pub fn new(action_counts: Vec<usize>, utilities: Vec<Vec<f64>>) -> Result<Self> {
        if action_counts.is_empty() {
            return Err(Error::Shape("a game needs at least one player".into()));
        }
        if let Some(p) = action_counts.iter().position(|&m| m == 0) {
            return Err(Error::Shape(format!("player {p} has no actions")));
        }
        let entries = joint_space_size(&action_counts);
        if entries > MAX_DENSE_ENTRIES {
            return Err(Error::Capacity {
                entries,
                limit: MAX_DENSE_ENTRIES,
            });
        }
        if utilities.len() != action_counts.len() {
            return Err(Error::Shape(format!(
                "{} utility tables for {} players",
                utilities.len(),
                action_counts.len()
            )));
        }
        let entries = entries as usize;
        for (i, table) in utilities.iter().enumerate() {
            if table.len() != entries {
                return Err(Error::Shape(format!(
                    "utility table of player {i} has {} entries, expected {entries}",
                    table.len()
                )));
            }
            if let Some(k) = table.iter().position(|v| !v.is_finite()) {
                return Err(Error::Shape(format!(
                    "utility table of player {i} has a non-finite entry at index {k}"
                )));
            }
        }
        let mut strides = vec![1; action_counts.len()];
        for k in (0..action_counts.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * action_counts[k + 1];
        }
        let positive = utilities.iter().flatten().all(|&v| v > 0.0);
        Ok(Self {
            action_counts,
            strides,
            utilities,
            positive,
        })
    }

    /// Two-player game from row-player and column-player matrices.
    pub fn bimatrix(row: &[Vec<f64>], col: &[Vec<f64>]) -> Result<Self> {
        let rows = row.len();
        let cols = row.first().map_or(0, Vec::len);
        if col.len() != rows || row.iter().chain(col).any(|r| r.len() != cols) {
            return Err(Error::Shape("bimatrix tables must be equal-sized rectangles".into()));
        }
        let flat = |m: &[Vec<f64>]| m.iter().flatten().copied().collect::<Vec<_>>();
        Self::new(vec![rows, cols], vec![flat(row), flat(col)])
    }

    /// Builds a dense game by evaluating `f(joint, player)` over the joint space.
    pub fn from_fn(action_counts: Vec<usize>, mut f: impl FnMut(&[ActionIndex], usize) -> f64) -> Result<Self> {
        let entries = joint_space_size(&action_counts);
        if entries > MAX_DENSE_ENTRIES {
            return Err(Error::Capacity {
                entries,
                limit: MAX_DENSE_ENTRIES,
            });
        }
        let n = action_counts.len();
        let mut utilities = vec![Vec::with_capacity(entries as usize); n];
        for_each_joint(&action_counts, |joint| {
            for (i, table) in utilities.iter_mut().enumerate() {
                table.push(f(joint, i));
            }
        });
        Self::new(action_counts, utilities)
    }

    /// True iff every utility entry is strictly positive.
    pub fn is_positive(&self) -> bool {
        self.positive
    }

    /// Flat row-major utility table of `player`.
    pub fn utilities(&self, player: usize) -> &[f64] {
        &self.utilities[player]
    }

    pub fn flat_index(&self, joint: &[ActionIndex]) -> usize {
        joint.iter().zip(&self.strides).map(|(x, s)| x * s).sum()
    }

    /// Multiplies every utility of every player by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.action_counts.clone(),
            self.utilities
                .iter()
                .map(|t| t.iter().map(|v| v * factor).collect())
                .collect(),
        )
    }

    /// Adds one constant per player so that each player's minimum utility is
    /// exactly `epsilon`.
    pub fn shift_positive(&self, epsilon: f64) -> Result<Shifted<DenseGame>> {
        check_epsilon(epsilon)?;
        let offsets: Vec<f64> = (0..self.player_count())
            .map(|i| epsilon - self.min_utility(i))
            .collect();
        let utilities = self
            .utilities
            .iter()
            .zip(&offsets)
            .map(|(t, off)| t.iter().map(|v| v + off).collect())
            .collect();
        Ok(Shifted {
            game: Self::new(self.action_counts.clone(), utilities)?,
            offsets,
        })
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "shift epsilon must be a finite value > 0, got {epsilon}"
        )));
    }
    Ok(())
}

/// Calls `f` on every joint action in row-major order.
pub(crate) fn for_each_joint(counts: &[usize], mut f: impl FnMut(&[ActionIndex])) {
    if counts.iter().any(|&m| m == 0) {
        return;
    }
    let mut joint = vec![0; counts.len()];
    loop {
        f(&joint);
        let mut k = counts.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            joint[k] += 1;
            if joint[k] < counts[k] {
                break;
            }
            joint[k] = 0;
        }
    }
}

impl Game for DenseGame {
    fn player_count(&self) -> usize {
        self.action_counts.len()
    }

    fn action_counts(&self) -> &[usize] {
        &self.action_counts
    }

    fn pure_payoff_unchecked(&self, joint: &[ActionIndex], player: usize) -> f64 {
        self.utilities[player][self.flat_index(joint)]
    }

    fn action_payoffs_into(&self, profile: &StrategyProfile, player: usize, out: &mut [f64]) {
        // Contract every axis except `player`: trailing axes first, then leading.
        let counts = &self.action_counts;
        let n = counts.len();
        let mut cur: Vec<f64> = self.utilities[player].clone();
        let mut next = Vec::with_capacity(cur.len());
        for axis in (player + 1..n).rev() {
            let m = counts[axis];
            let p = profile[axis].as_slice();
            next.clear();
            next.extend(cur.chunks_exact(m).map(|c| dot(c, p)));
            std::mem::swap(&mut cur, &mut next);
        }
        for axis in 0..player {
            let m = counts[axis];
            let rest = cur.len() / m;
            let p = profile[axis].as_slice();
            next.clear();
            next.resize(rest, 0.0);
            for (x, block) in cur.chunks_exact(rest).enumerate() {
                let w = p[x];
                if w != 0.0 {
                    for (acc, v) in next.iter_mut().zip(block) {
                        *acc += w * v;
                    }
                }
            }
            std::mem::swap(&mut cur, &mut next);
        }
        out.copy_from_slice(&cur);
    }

    fn pure_action_payoffs_into(&self, joint: &[ActionIndex], player: usize, out: &mut [f64]) {
        let base: usize = joint
            .iter()
            .zip(&self.strides)
            .enumerate()
            .filter(|&(k, _)| k != player)
            .map(|(_, (x, s))| x * s)
            .sum();
        let stride = self.strides[player];
        let table = &self.utilities[player];
        for (a, o) in out.iter_mut().enumerate() {
            *o = table[base + a * stride];
        }
    }

    fn min_utility(&self, player: usize) -> f64 {
        self.utilities[player].iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn max_utility(&self, player: usize) -> f64 {
        self.utilities[player].iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// A game together with the per-player constants that were added to it.
#[derive(Debug, Clone, PartialEq)]
pub struct Shifted<G> {
    pub game: G,
    pub offsets: Vec<f64>,
}

/// One directed pairwise table `f_ij`, owned by player `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub to: usize,
    /// Row-major `m_i x m_j` table indexed by `(x_i, x_j)`.
    pub table: Vec<f64>,
}

/// Graphical game whose utilities are sums of pairwise tables over a
/// neighbor relation.
#[derive(Debug, Clone, PartialEq)]
pub struct PolymatrixGame {
    action_counts: Vec<usize>,
    neighbors: Vec<Vec<Edge>>,
}

impl PolymatrixGame {
    /// Game with the given action counts and no edges.
    pub fn new(action_counts: Vec<usize>) -> Result<Self> {
        if action_counts.is_empty() {
            return Err(Error::Shape("a game needs at least one player".into()));
        }
        if let Some(p) = action_counts.iter().position(|&m| m == 0) {
            return Err(Error::Shape(format!("player {p} has no actions")));
        }
        let n = action_counts.len();
        Ok(Self {
            action_counts,
            neighbors: vec![Vec::new(); n],
        })
    }

    /// Adds the directed table `f_from,to` (`m_from x m_to`, row-major).
    pub fn add_edge(&mut self, from: usize, to: usize, table: Vec<f64>) -> Result<()> {
        let n = self.action_counts.len();
        if from >= n || to >= n {
            return Err(Error::Shape(format!(
                "edge ({from}, {to}) references a player outside 0..{n}"
            )));
        }
        if from == to {
            return Err(Error::Shape(format!("player {from} cannot neighbor itself")));
        }
        if self.neighbors[from].iter().any(|e| e.to == to) {
            return Err(Error::Shape(format!("duplicate edge ({from}, {to})")));
        }
        let expected = self.action_counts[from] * self.action_counts[to];
        if table.len() != expected {
            return Err(Error::Shape(format!(
                "edge ({from}, {to}) table has {} entries, expected {}x{}",
                table.len(),
                self.action_counts[from],
                self.action_counts[to]
            )));
        }
        if let Some(k) = table.iter().position(|v| !v.is_finite()) {
            return Err(Error::Shape(format!(
                "edge ({from}, {to}) table has a non-finite entry at index {k}"
            )));
        }
        self.neighbors[from].push(Edge { to, table });
        Ok(())
    }

    /// Directed edges owned by `player`, i.e. the neighbor list `N(player)`.
    pub fn edges(&self, player: usize) -> &[Edge] {
        &self.neighbors[player]
    }

    /// Total number of directed edges.
    pub fn directed_edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum()
    }

    /// Materializes the joint-space tables.
    pub fn expand_to_dense(&self) -> Result<DenseGame> {
        DenseGame::from_fn(self.action_counts.clone(), |joint, i| {
            self.pure_payoff_unchecked(joint, i)
        })
    }

    /// Adds `epsilon - min_i` to each player's utility by spreading the offset
    /// evenly over the player's tables. Players without neighbors cannot be
    /// shifted and produce an error.
    pub fn shift_positive(&self, epsilon: f64) -> Result<Shifted<PolymatrixGame>> {
        check_epsilon(epsilon)?;
        let mut game = self.clone();
        let mut offsets = Vec::with_capacity(self.player_count());
        for (i, edges) in game.neighbors.iter_mut().enumerate() {
            let offset = epsilon - self.min_utility(i);
            if edges.is_empty() {
                return Err(Error::InvalidParameter(format!(
                    "player {i} has no neighbors; its utility is identically 0 and cannot be shifted"
                )));
            }
            let share = offset / edges.len() as f64;
            for e in edges.iter_mut() {
                e.table.iter_mut().for_each(|v| *v += share);
            }
            offsets.push(offset);
        }
        Ok(Shifted { game, offsets })
    }
}

impl Game for PolymatrixGame {
    fn player_count(&self) -> usize {
        self.action_counts.len()
    }

    fn action_counts(&self) -> &[usize] {
        &self.action_counts
    }

    fn pure_payoff_unchecked(&self, joint: &[ActionIndex], player: usize) -> f64 {
        let xi = joint[player];
        self.neighbors[player]
            .iter()
            .map(|e| e.table[xi * self.action_counts[e.to] + joint[e.to]])
            .sum()
    }

    fn action_payoffs_into(&self, profile: &StrategyProfile, player: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for e in &self.neighbors[player] {
            let p = profile[e.to].as_slice();
            let mj = p.len();
            for (o, row) in out.iter_mut().zip(e.table.chunks_exact(mj)) {
                *o += dot(row, p);
            }
        }
    }

    fn pure_action_payoffs_into(&self, joint: &[ActionIndex], player: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for e in &self.neighbors[player] {
            let mj = self.action_counts[e.to];
            let xj = joint[e.to];
            for (a, o) in out.iter_mut().enumerate() {
                *o += e.table[a * mj + xj];
            }
        }
    }

    fn min_utility(&self, player: usize) -> f64 {
        // Minimizing a sum of pairwise terms that share x_i: fix x_i, then
        // each neighbor's term is minimized independently.
        extreme_utility(self, player, f64::min, f64::INFINITY)
    }

    fn max_utility(&self, player: usize) -> f64 {
        extreme_utility(self, player, f64::max, f64::NEG_INFINITY)
    }
}

fn extreme_utility(game: &PolymatrixGame, player: usize, pick: fn(f64, f64) -> f64, init: f64) -> f64 {
    let mi = game.action_counts[player];
    (0..mi)
        .map(|xi| {
            game.neighbors[player]
                .iter()
                .map(|e| {
                    let mj = game.action_counts[e.to];
                    e.table[xi * mj..(xi + 1) * mj].iter().copied().fold(init, pick)
                })
                .sum::<f64>()
        })
        .fold(init, pick)
}

/// Either representation, as loaded from a game file.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyGame {
    Dense(DenseGame),
    Polymatrix(PolymatrixGame),
}

macro_rules! delegate {
    ($self:ident, $g:ident => $e:expr) => {
        match $self {
            AnyGame::Dense($g) => $e,
            AnyGame::Polymatrix($g) => $e,
        }
    };
}

impl Game for AnyGame {
    fn player_count(&self) -> usize {
        delegate!(self, g => g.player_count())
    }
    fn action_counts(&self) -> &[usize] {
        delegate!(self, g => g.action_counts())
    }
    fn pure_payoff_unchecked(&self, joint: &[ActionIndex], player: usize) -> f64 {
        delegate!(self, g => g.pure_payoff_unchecked(joint, player))
    }
    fn action_payoffs_into(&self, profile: &StrategyProfile, player: usize, out: &mut [f64]) {
        delegate!(self, g => g.action_payoffs_into(profile, player, out))
    }
    fn pure_action_payoffs_into(&self, joint: &[ActionIndex], player: usize, out: &mut [f64]) {
        delegate!(self, g => g.pure_action_payoffs_into(joint, player, out))
    }
    fn min_utility(&self, player: usize) -> f64 {
        delegate!(self, g => g.min_utility(player))
    }
    fn max_utility(&self, player: usize) -> f64 {
        delegate!(self, g => g.max_utility(player))
    }
}

impl AnyGame {
    pub fn shift_positive(&self, epsilon: f64) -> Result<Shifted<AnyGame>> {
        Ok(match self {
            AnyGame::Dense(g) => {
                let s = g.shift_positive(epsilon)?;
                Shifted {
                    game: AnyGame::Dense(s.game),
                    offsets: s.offsets,
                }
            }
            AnyGame::Polymatrix(g) => {
                let s = g.shift_positive(epsilon)?;
                Shifted {
                    game: AnyGame::Polymatrix(s.game),
                    offsets: s.offsets,
                }
            }
        })
    }
}

impl From<DenseGame> for AnyGame {
    fn from(g: DenseGame) -> Self {
        AnyGame::Dense(g)
    }
}

impl From<PolymatrixGame> for AnyGame {
    fn from(g: PolymatrixGame) -> Self {
        AnyGame::Polymatrix(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;
    use crate::strategy::{MixedStrategy, StrategyProfile};

    fn profile(v: Vec<Vec<f64>>) -> StrategyProfile {
        StrategyProfile::new(v.into_iter().map(|p| MixedStrategy::new(p).unwrap()).collect()).unwrap()
    }

    #[test]
    fn pd_pure_payoffs() {
        let pd = builtin::prisoners_dilemma();
        assert_eq!(pure_payoff(&pd, &[1, 1], 0).unwrap(), 2.0);
        assert_eq!(pure_payoff(&pd, &[0, 1], 0).unwrap(), 1.0);
        assert_eq!(pure_payoff(&pd, &[0, 1], 1).unwrap(), 4.0);
    }

    #[test]
    fn pure_payoff_rejects_bad_action() {
        let pd = builtin::prisoners_dilemma();
        assert_eq!(
            pure_payoff(&pd, &[0, 2], 0),
            Err(Error::InvalidAction {
                player: 1,
                action: 2,
                count: 2
            })
        );
        assert!(matches!(pure_payoff(&pd, &[0], 0), Err(Error::Shape(_))));
    }

    #[test]
    fn single_edge_polymatrix_payoff() {
        let mut g = PolymatrixGame::new(vec![2, 2]).unwrap();
        g.add_edge(0, 1, vec![0.5; 4]).unwrap();
        assert_eq!(pure_payoff(&g, &[0, 0], 0).unwrap(), 0.5);
        assert_eq!(pure_payoff(&g, &[0, 0], 1).unwrap(), 0.0);
    }

    #[test]
    fn pd_action_payoffs() {
        let pd = builtin::prisoners_dilemma();
        let p = profile(vec![vec![0.5, 0.5], vec![1.0, 0.0]]);
        assert_eq!(action_payoff_vector(&pd, &p, 0).unwrap(), vec![3.0, 4.0]);
        let p = profile(vec![vec![0.5, 0.5], vec![0.5, 0.5]]);
        assert_eq!(action_payoff_vector(&pd, &p, 0).unwrap(), vec![2.0, 3.0]);
    }

    #[test]
    fn constant_utility_three_players() {
        let g = DenseGame::from_fn(vec![2, 3, 2], |_, i| if i == 0 { 1.75 } else { 0.0 }).unwrap();
        let p = profile(vec![vec![0.3, 0.7], vec![0.2, 0.2, 0.6], vec![0.9, 0.1]]);
        let psi = action_payoff_vector(&g, &p, 0).unwrap();
        for v in psi {
            assert!((v - 1.75).abs() < 1e-12);
        }
    }

    #[test]
    fn expected_and_overall_payoffs() {
        let pd = builtin::prisoners_dilemma();
        let dd = StrategyProfile::pure(&pd, &[1, 1]).unwrap();
        assert_eq!(expected_payoffs(&pd, &dd).unwrap(), vec![2.0, 2.0]);
        assert_eq!(overall_payoff(&pd, &dd).unwrap(), 4.0);
        let p = profile(vec![vec![0.5, 0.5], vec![1.0, 0.0]]);
        assert!((expected_payoff(&pd, &p, 0).unwrap() - 3.5).abs() < 1e-12);
    }

    #[test]
    fn hard_game_nash_payoffs() {
        let g = builtin::hard_5x5();
        let nash = builtin::hard_5x5_nash();
        let u = expected_payoffs(&g, &nash).unwrap();
        assert!((u[0] - 4.0).abs() < 1e-12);
        assert!((u[1] - 3.0).abs() < 1e-12);
        assert!((overall_payoff(&g, &nash).unwrap() - 7.0).abs() < 1e-12);
    }

    #[test]
    fn shift_positive_examples() {
        let g = builtin::hard_5x5();
        let s = g.shift_positive(1.0).unwrap();
        assert_eq!(s.offsets[0], 3.0);
        assert_eq!(s.game.min_utility(0), 1.0);
        assert!(s.game.is_positive());
        for (a, b) in g.utilities(0).iter().zip(s.game.utilities(0)) {
            assert_eq!(a + 3.0, *b);
        }

        let pd = builtin::prisoners_dilemma();
        let s = pd.shift_positive(1.0).unwrap();
        assert_eq!(s.offsets, vec![0.0, 0.0]);
        assert_eq!(s.game, pd);

        let z = DenseGame::bimatrix(&[vec![0.0, 2.0]], &[vec![1.0, 3.0]]).unwrap();
        let s = z.shift_positive(0.5).unwrap();
        assert_eq!(s.game.utilities(0), &[0.5, 2.5]);
        assert_eq!(s.game.utilities(1), &[0.5, 2.5]);

        assert!(matches!(pd.shift_positive(0.0), Err(Error::InvalidParameter(_))));
        assert!(matches!(pd.shift_positive(-1.0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn polymatrix_shift_offsets_each_player() {
        let mut g = PolymatrixGame::new(vec![2, 2, 2]).unwrap();
        g.add_edge(0, 1, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        g.add_edge(0, 2, vec![0.0, 0.5, 0.5, 0.0]).unwrap();
        g.add_edge(1, 0, vec![0.7, 0.2, 0.3, 0.9]).unwrap();
        g.add_edge(2, 1, vec![0.6, 0.6, 0.6, 0.6]).unwrap();
        let s = g.shift_positive(1.0).unwrap();
        for i in 0..3 {
            assert!((s.game.min_utility(i) - 1.0).abs() < 1e-12);
        }
        let lone = PolymatrixGame::new(vec![2, 2]).unwrap();
        assert!(lone.shift_positive(1.0).is_err());
    }

    #[test]
    fn expand_single_edge() {
        let mut g = PolymatrixGame::new(vec![2, 3]).unwrap();
        let f12 = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let f21 = vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        g.add_edge(0, 1, f12.clone()).unwrap();
        g.add_edge(1, 0, f21).unwrap();
        let d = g.expand_to_dense().unwrap();
        assert_eq!(d.utilities(0), f12.as_slice());
        // f21 is indexed (x_1, x_0); the dense table is indexed (x_0, x_1).
        assert_eq!(d.utilities(1), &[0.1, 0.3, 0.5, 0.2, 0.4, 0.6]);
    }

    #[test]
    fn expand_empty_edges_is_zero() {
        let g = PolymatrixGame::new(vec![2, 2, 3]).unwrap();
        let d = g.expand_to_dense().unwrap();
        for i in 0..3 {
            assert!(d.utilities(i).iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn expand_guard() {
        let g = PolymatrixGame::new(vec![100, 100, 100, 100]).unwrap();
        assert!(matches!(g.expand_to_dense(), Err(Error::Capacity { .. })));
    }

    #[test]
    fn polymatrix_rejects_bad_edges() {
        let mut g = PolymatrixGame::new(vec![2, 2]).unwrap();
        assert!(g.add_edge(0, 0, vec![0.0; 4]).is_err());
        assert!(g.add_edge(0, 1, vec![0.0; 3]).is_err());
        assert!(g.add_edge(0, 2, vec![0.0; 4]).is_err());
        assert!(g.add_edge(0, 1, vec![f64::NAN, 0.0, 0.0, 0.0]).is_err());
        g.add_edge(0, 1, vec![0.0; 4]).unwrap();
        assert!(g.add_edge(0, 1, vec![0.0; 4]).is_err());
    }

    #[test]
    fn dense_rejects_bad_tables() {
        assert!(DenseGame::new(vec![2, 2], vec![vec![0.0; 4]]).is_err());
        assert!(DenseGame::new(vec![2, 2], vec![vec![0.0; 4], vec![0.0; 3]]).is_err());
        assert!(DenseGame::new(vec![2, 0], vec![vec![], vec![]]).is_err());
        assert!(DenseGame::new(vec![2, 2], vec![vec![0.0; 4], vec![f64::INFINITY; 4]]).is_err());
    }

    #[test]
    fn pure_action_payoffs_match_table() {
        let g = builtin::hard_5x5();
        let mut out = vec![0.0; 5];
        g.pure_action_payoffs_into(&[0, 3], 0, &mut out);
        assert_eq!(out, vec![5.0, -2.0, 4.0, 7.0, 5.0]);
        g.pure_action_payoffs_into(&[2, 0], 1, &mut out);
        assert_eq!(out, vec![6.0, 2.0, -2.0, 9.0, 1.0]);
    }
}
