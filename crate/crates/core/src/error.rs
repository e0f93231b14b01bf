use thiserror::Error;

use crate::linprog::LpError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("mass mismatch: {left} vs {right}")]
    MassMismatch { left: f64, right: f64 },

    #[error("mass parameter {m} outside [{lo}, {hi}]")]
    MassOutOfRange { m: f64, lo: f64, hi: f64 },

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("tensor of {tuples} tuples exceeds the cap of {cap}")]
    TensorTooLarge { tuples: u128, cap: usize },

    #[error("partial plan for marginal {marginal} is not graphical over atom {atom} at {point:?}")]
    NonGraphical {
        marginal: usize,
        atom: usize,
        point: Vec<f64>,
    },

    #[error("linear program {status}: {context}")]
    LpStatus {
        status: &'static str,
        context: String,
    },

    #[error(transparent)]
    Lp(#[from] LpError),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
