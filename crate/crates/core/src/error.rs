use thiserror::Error;

/// Errors raised by game construction, evaluation and the solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid action {action} for player {player} (player has {count} actions)")]
    InvalidAction { player: usize, action: usize, count: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("joint space of {entries} entries exceeds the limit of {limit}")]
    Capacity { entries: u128, limit: u128 },

    #[error(
        "non-positive action payoff {value} for {who} action {action}; \
         the power response needs strictly positive payoffs (apply shift_positive first)",
        who = match .player { Some(p) => format!("player {p}"), None => "an unspecified player".to_string() }
    )]
    NonPositivePayoff {
        player: Option<usize>,
        action: usize,
        value: f64,
    },

    #[error(
        "player {player} has non-positive utility {value}; the power response needs strictly \
         positive utilities (apply shift_positive first)"
    )]
    NonPositiveUtility { player: usize, value: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid society spec: {0}")]
    InvalidSpec(String),

    #[error("invalid propagation matrix: {0}")]
    InvalidPropagation(String),

    #[error("{0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
