use thiserror::Error;

use crate::table::CellViolation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("tolerance must be a positive finite number, got {0}")]
    InvalidTolerance(f64),

    #[error("value {value} is not a binary {what} (expected 0 or 1)")]
    NotBinary { what: &'static str, value: i64 },

    #[error("missing table entry at (x={x}, y={y}, a={a}, b={b})")]
    MissingEntry {
        x: usize,
        y: usize,
        a: usize,
        b: usize,
    },

    #[error("table has entries beyond the 2x2x2x2 shape")]
    ExtraEntry,

    #[error("invalid box table: {}", format_violations(.0))]
    InvalidTable(Vec<CellViolation>),

    #[error("cannot mix an empty list of boxes")]
    EmptyMix,

    #[error("got {boxes} boxes but {weights} weights")]
    MixLengthMismatch { boxes: usize, weights: usize },

    #[error("mixture weight {0} is negative or not finite")]
    NegativeWeight(f64),

    #[error("mixture weights sum to {0}, expected 1")]
    WeightSum(f64),

    #[error("invalid λ distribution (p0={p0}, p1={p1})")]
    InvalidLambdaDist { p0: f64, p1: f64 },

    #[error("invalid grid {start}:{stop}:{step}")]
    InvalidGrid { start: f64, stop: f64, step: f64 },

    #[error("measurement angle {0} is not finite")]
    NonFiniteAngle(f64),

    #[error("trials per setting must be at least 1")]
    NoTrials,

    #[error("setting pair (x={x}, y={y}) has no trials")]
    InsufficientTrials { x: usize, y: usize },
}

fn format_violations(v: &[CellViolation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
