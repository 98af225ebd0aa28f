//! Generalized equilibria of normal-form games under a tunable
//! "selfishness" exponent, plus baselines, random societies and a
//! cooperative optimizer for pairwise-decomposable objectives.

pub mod baselines;
pub mod builtin;
pub mod coopt;
pub mod dynamics;
pub mod error;
pub mod format;
pub mod game;
pub mod society;
pub mod strategy;

pub use error::{Error, Result};
pub use game::{AnyGame, DenseGame, Game, PolymatrixGame};
pub use strategy::{MixedStrategy, StrategyProfile};
