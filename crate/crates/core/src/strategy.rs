//! Mixed strategies and strategy profiles.

use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{ActionIndex, Game};

/// Simplex tolerance for the sum of a mixed strategy.
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// Probability distribution over one player's actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct MixedStrategy(Vec<f64>);

impl MixedStrategy {
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(Error::Shape("a mixed strategy needs at least one action".into()));
        }
        if let Some(k) = probabilities.iter().position(|&p| !(p >= 0.0 && p.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "probability {} at action {k} is not a finite non-negative number",
                probabilities[k]
            )));
        }
        let sum: f64 = probabilities.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::InvalidParameter(format!(
                "probabilities sum to {sum}, expected 1"
            )));
        }
        Ok(Self(probabilities))
    }

    /// Value constructor for vectors already known to lie on the simplex.
    pub(crate) fn from_normalized(probabilities: Vec<f64>) -> Self {
        debug_assert!((probabilities.iter().sum::<f64>() - 1.0).abs() <= 1e-6);
        Self(probabilities)
    }

    pub fn uniform(actions: usize) -> Self {
        assert!(actions > 0, "uniform strategy over zero actions");
        Self(vec![1.0 / actions as f64; actions])
    }

    pub fn pure(actions: usize, action: ActionIndex) -> Result<Self> {
        if action >= actions {
            return Err(Error::InvalidParameter(format!(
                "action {action} out of range for {actions} actions"
            )));
        }
        let mut v = vec![0.0; actions];
        v[action] = 1.0;
        Ok(Self(v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Index of the most probable action (lowest index on ties).
    pub fn argmax(&self) -> ActionIndex {
        argmax(&self.0)
    }

    pub fn linf_distance(&self, other: &MixedStrategy) -> f64 {
        linf(&self.0, &other.0)
    }
}

impl TryFrom<Vec<f64>> for MixedStrategy {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<MixedStrategy> for Vec<f64> {
    fn from(s: MixedStrategy) -> Self {
        s.0
    }
}

impl Index<usize> for MixedStrategy {
    type Output = f64;
    fn index(&self, k: usize) -> &f64 {
        &self.0[k]
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (k, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = k;
        }
    }
    best
}

pub(crate) fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// One mixed strategy per player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StrategyProfile(Vec<MixedStrategy>);

impl StrategyProfile {
    pub fn new(strategies: Vec<MixedStrategy>) -> Result<Self> {
        if strategies.is_empty() {
            return Err(Error::Shape("a profile needs at least one player".into()));
        }
        Ok(Self(strategies))
    }

    /// Every player mixes uniformly.
    pub fn uniform(game: &(impl Game + ?Sized)) -> Self {
        Self(
            game.action_counts()
                .iter()
                .map(|&m| MixedStrategy::uniform(m))
                .collect(),
        )
    }

    /// Degenerate profile putting all mass on `joint`.
    pub fn pure(game: &(impl Game + ?Sized), joint: &[ActionIndex]) -> Result<Self> {
        let counts = game.action_counts();
        if joint.len() != counts.len() {
            return Err(Error::Shape(format!(
                "joint action has {} entries, game has {} players",
                joint.len(),
                counts.len()
            )));
        }
        joint
            .iter()
            .zip(counts)
            .map(|(&a, &m)| MixedStrategy::pure(m, a))
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }

    /// Verifies player count and per-player lengths against `game`.
    pub fn check_for(&self, game: &(impl Game + ?Sized)) -> Result<()> {
        let counts = game.action_counts();
        if self.0.len() != counts.len() {
            return Err(Error::Shape(format!(
                "profile has {} strategies, game has {} players",
                self.0.len(),
                counts.len()
            )));
        }
        for (i, (s, &m)) in self.0.iter().zip(counts).enumerate() {
            if s.len() != m {
                return Err(Error::Shape(format!(
                    "strategy of player {i} has {} entries, player has {m} actions",
                    s.len()
                )));
            }
        }
        Ok(())
    }

    pub fn player_count(&self) -> usize {
        self.0.len()
    }

    pub fn strategies(&self) -> &[MixedStrategy] {
        &self.0
    }

    pub(crate) fn strategies_mut(&mut self) -> &mut [MixedStrategy] {
        &mut self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = &MixedStrategy> {
        self.0.iter()
    }

    /// Largest per-entry difference across all players.
    pub fn linf_distance(&self, other: &StrategyProfile) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.linf_distance(b))
            .fold(0.0, f64::max)
    }

    /// Most probable action of every player.
    pub fn argmax_joint(&self) -> Vec<ActionIndex> {
        self.0.iter().map(MixedStrategy::argmax).collect()
    }
}

impl Index<usize> for StrategyProfile {
    type Output = MixedStrategy;
    fn index(&self, i: usize) -> &MixedStrategy {
        &self.0[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixed_strategy_validation() {
        assert!(MixedStrategy::new(vec![0.5, 0.5]).is_ok());
        assert!(MixedStrategy::new(vec![0.5, 0.6]).is_err());
        assert!(MixedStrategy::new(vec![-0.1, 1.1]).is_err());
        assert!(MixedStrategy::new(vec![]).is_err());
        assert!(MixedStrategy::new(vec![f64::NAN, 1.0]).is_err());
        assert!(MixedStrategy::new(vec![0.3, 0.7 + 5e-10]).is_ok());
    }

    #[test]
    fn pure_and_uniform() {
        assert_eq!(MixedStrategy::pure(3, 1).unwrap().as_slice(), &[0.0, 1.0, 0.0]);
        assert!(MixedStrategy::pure(3, 3).is_err());
        assert_eq!(MixedStrategy::uniform(4).as_slice(), &[0.25; 4]);
    }

    #[test]
    fn argmax_prefers_lowest_index() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0, 2.0]), 1);
        assert_eq!(argmax(&[5.0]), 0);
    }

    #[test]
    fn serde_round_trip_validates() {
        let p: StrategyProfile = serde_json::from_str("[[0.25,0.75],[1.0,0.0,0.0]]").unwrap();
        assert_eq!(p.player_count(), 2);
        assert_eq!(serde_json::to_string(&p).unwrap(), "[[0.25,0.75],[1.0,0.0,0.0]]");
        assert!(serde_json::from_str::<StrategyProfile>("[[0.5,0.6]]").is_err());
    }
}
