//! Completely selfish baselines: best response, fictitious play and pure Nash
//! verification.

use std::collections::{HashSet, VecDeque};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{expected_payoffs, ActionIndex, Game};
use crate::strategy::{MixedStrategy, StrategyProfile};

/// Absolute tolerance under which two action payoffs count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Number of recent states remembered for cycle detection.
pub const CYCLE_MEMORY: usize = 10_000;

/// One action per player.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct PureProfile(Vec<ActionIndex>);

impl PureProfile {
    pub fn new(game: &(impl Game + ?Sized), actions: Vec<ActionIndex>) -> Result<Self> {
        let counts = game.action_counts();
        if actions.len() != counts.len() {
            return Err(Error::Shape(format!(
                "pure profile has {} actions, game has {} players",
                actions.len(),
                counts.len()
            )));
        }
        for (player, (&action, &count)) in actions.iter().zip(counts).enumerate() {
            if action >= count {
                return Err(Error::InvalidAction { player, action, count });
            }
        }
        Ok(Self(actions))
    }

    pub fn actions(&self) -> &[ActionIndex] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<ActionIndex> {
        self.0
    }
}

/// Terminal profile found by a baseline method.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum BaselineProfile {
    Pure(PureProfile),
    Mixed(StrategyProfile),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineResult {
    pub profile: BaselineProfile,
    pub payoffs: Vec<f64>,
    pub cycle_detected: bool,
    /// Pure equilibrium reached (best response) or round budget completed
    /// (fictitious play).
    pub converged: bool,
    pub rounds: usize,
}

impl BaselineResult {
    pub fn overall_payoff(&self) -> f64 {
        self.payoffs.iter().sum()
    }
}

/// Either kind of opponent profile for best-response queries.
pub enum Opponents<'a> {
    Pure(&'a PureProfile),
    Mixed(&'a StrategyProfile),
}

impl<'a> From<&'a PureProfile> for Opponents<'a> {
    fn from(p: &'a PureProfile) -> Self {
        Opponents::Pure(p)
    }
}

impl<'a> From<&'a StrategyProfile> for Opponents<'a> {
    fn from(p: &'a StrategyProfile) -> Self {
        Opponents::Mixed(p)
    }
}

fn argmax_set(psi: &[f64], out: &mut Vec<ActionIndex>) {
    let best = psi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    out.clear();
    out.extend((0..psi.len()).filter(|&k| best - psi[k] <= TIE_TOLERANCE));
}

/// Actions of `player` whose payoff is within [`TIE_TOLERANCE`] of the best.
pub fn best_response_set<'a>(
    game: &(impl Game + ?Sized),
    opponents: impl Into<Opponents<'a>>,
    player: usize,
) -> Result<Vec<ActionIndex>> {
    if player >= game.player_count() {
        return Err(Error::Shape(format!("player {player} out of range")));
    }
    let mut psi = vec![0.0; game.action_counts()[player]];
    match opponents.into() {
        Opponents::Pure(p) => {
            PureProfile::new(game, p.0.clone())?;
            game.pure_action_payoffs_into(&p.0, player, &mut psi);
        }
        Opponents::Mixed(p) => {
            p.check_for(game)?;
            game.action_payoffs_into(p, player, &mut psi);
        }
    }
    let mut out = Vec::new();
    argmax_set(&psi, &mut out);
    Ok(out)
}

/// True iff every player's action is a best response to the others.
pub fn is_pure_nash(game: &(impl Game + ?Sized), profile: &PureProfile) -> Result<bool> {
    PureProfile::new(game, profile.0.clone())?;
    let mut psi = Vec::new();
    let mut set = Vec::new();
    for (i, &m) in game.action_counts().iter().enumerate() {
        psi.resize(m, 0.0);
        game.pure_action_payoffs_into(&profile.0, i, &mut psi);
        argmax_set(&psi, &mut set);
        if !set.contains(&profile.0[i]) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn pure_payoffs(game: &(impl Game + ?Sized), joint: &[ActionIndex]) -> Vec<f64> {
    (0..game.player_count())
        .map(|i| game.pure_payoff_unchecked(joint, i))
        .collect()
}

/// Round-robin best-response dynamics from a random pure profile.
///
/// A player whose current action is already a best response keeps it;
/// otherwise it moves to a uniformly random member of its best-response set.
/// Stops at a pure Nash equilibrium, at a repeated end-of-round state (cycle),
/// or after `max_rounds` rounds.
pub fn best_response_dynamics(game: &(impl Game + ?Sized), seed: u64, max_rounds: usize) -> Result<BaselineResult> {
    if max_rounds == 0 {
        return Err(Error::InvalidParameter("max_rounds must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let counts = game.action_counts();
    let mut joint: Vec<ActionIndex> = counts.iter().map(|&m| rng.random_range(0..m)).collect();
    let mut psi = vec![0.0; counts.iter().copied().max().unwrap_or(0)];
    let mut set = Vec::new();
    let mut seen: HashSet<Vec<ActionIndex>> = HashSet::new();
    let mut order: VecDeque<Vec<ActionIndex>> = VecDeque::new();
    let mut rounds = 0;
    let mut cycle = false;
    let mut settled = false;
    loop {
        rounds += 1;
        let mut moved = false;
        for (i, &m) in counts.iter().enumerate() {
            let psi = &mut psi[..m];
            game.pure_action_payoffs_into(&joint, i, psi);
            argmax_set(psi, &mut set);
            if !set.contains(&joint[i]) {
                joint[i] = *set.choose(&mut rng).expect("argmax set is non-empty");
                moved = true;
            }
        }
        if !moved {
            settled = true;
            break;
        }
        if rounds >= max_rounds {
            break;
        }
        if !seen.insert(joint.clone()) {
            cycle = true;
            break;
        }
        order.push_back(joint.clone());
        if order.len() > CYCLE_MEMORY {
            let old = order.pop_front().expect("non-empty");
            seen.remove(&old);
        }
    }
    let payoffs = pure_payoffs(game, &joint);
    Ok(BaselineResult {
        profile: BaselineProfile::Pure(PureProfile(joint)),
        payoffs,
        cycle_detected: cycle,
        converged: settled,
        rounds,
    })
}

/// Fictitious play: each round every player best-responds (uniform
/// tie-break) to the others' empirical action frequencies. Round 1 is the
/// random initial action. Returns the time-averaged profile.
pub fn fictitious_play(game: &(impl Game + ?Sized), seed: u64, rounds: usize) -> Result<BaselineResult> {
    if rounds == 0 {
        return Err(Error::InvalidParameter("rounds must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let counts = game.action_counts();
    let n = counts.len();
    let mut tallies: Vec<Vec<f64>> = counts.iter().map(|&m| vec![0.0; m]).collect();
    for (t, &m) in tallies.iter_mut().zip(counts) {
        t[rng.random_range(0..m)] = 1.0;
    }
    let mut psi = Vec::new();
    let mut set = Vec::new();
    let mut picks = vec![0; n];
    for r in 1..rounds {
        let freq = StrategyProfile::new(
            tallies
                .iter()
                .map(|t| MixedStrategy::from_normalized(t.iter().map(|c| c / r as f64).collect()))
                .collect(),
        )?;
        for (i, &m) in counts.iter().enumerate() {
            psi.resize(m, 0.0);
            game.action_payoffs_into(&freq, i, &mut psi);
            argmax_set(&psi, &mut set);
            picks[i] = *set.choose(&mut rng).expect("argmax set is non-empty");
        }
        for (t, &a) in tallies.iter_mut().zip(&picks) {
            t[a] += 1.0;
        }
    }
    let profile = StrategyProfile::new(
        tallies
            .into_iter()
            .map(|t| MixedStrategy::from_normalized(t.into_iter().map(|c| c / rounds as f64).collect()))
            .collect(),
    )?;
    let payoffs = expected_payoffs(game, &profile)?;
    Ok(BaselineResult {
        profile: BaselineProfile::Mixed(profile),
        payoffs,
        cycle_detected: false,
        converged: true,
        rounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;
    use crate::game::DenseGame;

    #[test]
    fn pd_best_response_is_defect() {
        let pd = builtin::prisoners_dilemma();
        for joint in [[0, 0], [0, 1], [1, 0], [1, 1]] {
            let p = PureProfile::new(&pd, joint.to_vec()).unwrap();
            assert_eq!(best_response_set(&pd, &p, 0).unwrap(), vec![1]);
            assert_eq!(best_response_set(&pd, &p, 1).unwrap(), vec![1]);
        }
        let mixed = StrategyProfile::uniform(&pd);
        assert_eq!(best_response_set(&pd, &mixed, 0).unwrap(), vec![1]);
    }

    #[test]
    fn coordination_best_response_copies() {
        let g = builtin::coordination_6x6();
        for k in 0..6 {
            let p = PureProfile::new(&g, vec![0, k]).unwrap();
            assert_eq!(best_response_set(&g, &p, 0).unwrap(), vec![k]);
        }
    }

    #[test]
    fn constant_player_ties_everything() {
        let g = DenseGame::bimatrix(&vec![vec![2.0; 3]; 3], &vec![vec![1.0, 2.0, 3.0]; 3]).unwrap();
        let p = PureProfile::new(&g, vec![0, 0]).unwrap();
        assert_eq!(best_response_set(&g, &p, 0).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn pure_nash_examples() {
        let pd = builtin::prisoners_dilemma();
        assert!(is_pure_nash(&pd, &PureProfile::new(&pd, vec![1, 1]).unwrap()).unwrap());
        assert!(!is_pure_nash(&pd, &PureProfile::new(&pd, vec![0, 0]).unwrap()).unwrap());
        let g = builtin::coordination_6x6();
        for k in 0..6 {
            assert!(is_pure_nash(&g, &PureProfile::new(&g, vec![k, k]).unwrap()).unwrap());
            assert!(!is_pure_nash(&g, &PureProfile::new(&g, vec![k, (k + 1) % 6]).unwrap()).unwrap());
        }
    }

    #[test]
    fn pd_best_response_dynamics() {
        let pd = builtin::prisoners_dilemma();
        for seed in 0..20 {
            let r = best_response_dynamics(&pd, seed, 100).unwrap();
            assert_eq!(r.profile, BaselineProfile::Pure(PureProfile(vec![1, 1])));
            assert_eq!(r.payoffs, vec![2.0, 2.0]);
            assert!(!r.cycle_detected);
        }
    }

    #[test]
    fn single_action_game_is_immediate() {
        let g = DenseGame::new(vec![1, 1, 1], vec![vec![1.0]; 3]).unwrap();
        let r = best_response_dynamics(&g, 5, 10).unwrap();
        assert_eq!(r.rounds, 1);
        assert!(!r.cycle_detected);
    }

    #[test]
    fn matching_pennies_best_response_cycles() {
        let a = vec![vec![1.0, -1.0], vec![-1.0, 1.0]];
        let b = vec![vec![-1.0, 1.0], vec![1.0, -1.0]];
        let g = DenseGame::bimatrix(&a, &b).unwrap();
        let r = best_response_dynamics(&g, 1, 1000).unwrap();
        assert!(r.cycle_detected);
        assert!(r.rounds < 10);
    }

    #[test]
    fn fictitious_play_single_round_is_init() {
        let g = builtin::coordination_6x6();
        let r = fictitious_play(&g, 9, 1).unwrap();
        let BaselineProfile::Mixed(p) = &r.profile else {
            panic!()
        };
        for s in p.iter() {
            assert_eq!(s.as_slice().iter().filter(|&&v| v == 1.0).count(), 1);
        }
    }

    #[test]
    fn fictitious_play_pd_converges_to_defect() {
        let pd = builtin::prisoners_dilemma();
        let r = fictitious_play(&pd, 3, 2000).unwrap();
        let BaselineProfile::Mixed(p) = &r.profile else {
            panic!()
        };
        assert!(p[0][1] > 0.999 && p[1][1] > 0.999);
    }

    #[test]
    fn zero_round_budgets_are_rejected() {
        let pd = builtin::prisoners_dilemma();
        assert!(best_response_dynamics(&pd, 0, 0).is_err());
        assert!(fictitious_play(&pd, 0, 0).is_err());
    }
}
