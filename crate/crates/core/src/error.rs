use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("determinant {det} is not 1 (matrix is not in SL(2,R))")]
    NotUnimodular { det: f64 },

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("metric tensor (a={a}, b={b}, c={c}) violates a,b > 0 and ab - c^2 = 1")]
    InvalidMetric { a: f64, b: f64, c: f64 },

    #[error("reconstruction failed: residual {residual:e} exceeds {tolerance:e} ({context})")]
    Reconstruction {
        context: &'static str,
        residual: f64,
        tolerance: f64,
    },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("Fock truncation too small: tail norm {tail:e} exceeds {limit:e} at dim {dim}")]
    Truncation { dim: usize, tail: f64, limit: f64 },

    #[error("grid spacing {spacing} exceeds half the narrowest kernel width {width}")]
    Undersampled { spacing: f64, width: f64 },

    #[error("point ({x}, {p}) lies outside the grid")]
    OutOfGrid { x: f64, p: f64 },

    #[error("rejection sampler acceptance rate {rate:e} fell below {minimum:e}")]
    LowAcceptance { rate: f64, minimum: f64 },

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
