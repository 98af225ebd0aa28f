//! Built-in two-player games used by the experiments.

use crate::game::DenseGame;
use crate::strategy::{MixedStrategy, StrategyProfile};

/// Prisoner's dilemma. Action 0 is Cooperate, action 1 is Defect.
pub fn prisoners_dilemma() -> DenseGame {
    DenseGame::bimatrix(&[vec![3.0, 1.0], vec![4.0, 2.0]], &[vec![3.0, 4.0], vec![1.0, 2.0]]).expect("static table")
}

const HARD_5X5: [[(f64, f64); 5]; 5] = [
    [(2., 3.), (-1., 4.), (2., 4.), (5., 2.), (1., -1.)],
    [(2., 2.), (3., 0.), (4., 1.), (-2., 4.), (1., 3.)],
    [(4., 6.), (7., 2.), (2., -2.), (4., 9.), (2., 1.)],
    [(9., 0.), (-2., 6.), (6., 3.), (7., 0.), (0., 5.)],
    [(3., 2.), (6., 1.), (2., 5.), (5., 3.), (1., 0.)],
];

/// 5x5 bimatrix game with a single, mixed Nash equilibrium. Contains
/// negative entries, so the power response needs it shifted first.
pub fn hard_5x5() -> DenseGame {
    let row: Vec<Vec<f64>> = HARD_5X5.iter().map(|r| r.iter().map(|c| c.0).collect()).collect();
    let col: Vec<Vec<f64>> = HARD_5X5.iter().map(|r| r.iter().map(|c| c.1).collect()).collect();
    DenseGame::bimatrix(&row, &col).expect("static table")
}

/// Row strategy of the unique Nash equilibrium of [`hard_5x5`].
pub const HARD_5X5_NASH_ROW: [f64; 5] = [0.0, 0.0, 2.0 / 11.0, 4.0 / 11.0, 5.0 / 11.0];
/// Column strategy of the unique Nash equilibrium of [`hard_5x5`].
pub const HARD_5X5_NASH_COL: [f64; 5] = [0.0, 2.0 / 7.0, 3.0 / 7.0, 2.0 / 7.0, 0.0];

pub fn hard_5x5_nash() -> StrategyProfile {
    StrategyProfile::new(vec![
        MixedStrategy::new(HARD_5X5_NASH_ROW.to_vec()).expect("static strategy"),
        MixedStrategy::new(HARD_5X5_NASH_COL.to_vec()).expect("static strategy"),
    ])
    .expect("static profile")
}

/// Diagonal payoffs of the 6x6 coordination game, as printed: the last
/// diagonal cell is `(8, 8.5)`.
pub const COORD_6X6_DIAGONAL: [(f64, f64); 6] = [(6., 6.), (6.5, 6.5), (7., 7.), (7.5, 7.5), (8., 8.), (8., 8.5)];

fn coordination(diagonal: &[(f64, f64)]) -> DenseGame {
    let m = diagonal.len();
    let table = |pick: fn(&(f64, f64)) -> f64| -> Vec<Vec<f64>> {
        (0..m)
            .map(|r| (0..m).map(|c| if r == c { pick(&diagonal[r]) } else { 1.0 }).collect())
            .collect()
    };
    DenseGame::bimatrix(&table(|d| d.0), &table(|d| d.1)).expect("static table")
}

/// 6x6 coordination game with six pure Nash equilibria on the diagonal, with
/// the asymmetric `(8, 8.5)` last cell.
pub fn coordination_6x6() -> DenseGame {
    coordination(&COORD_6X6_DIAGONAL)
}

/// Symmetric variant of [`coordination_6x6`] whose last cell is `(8.5, 8.5)`.
pub fn coordination_6x6_symmetric() -> DenseGame {
    let mut diag = COORD_6X6_DIAGONAL;
    diag[5] = (8.5, 8.5);
    coordination(&diag)
}

/// Names accepted by [`by_name`].
pub const NAMES: [&str; 4] = ["pd", "hard5x5", "coord6x6", "coord6x6sym"];

pub fn by_name(name: &str) -> Option<DenseGame> {
    match name {
        "pd" => Some(prisoners_dilemma()),
        "hard5x5" => Some(hard_5x5()),
        "coord6x6" => Some(coordination_6x6()),
        "coord6x6sym" => Some(coordination_6x6_symmetric()),
        _ => None,
    }
}
