use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("lambda {0} outside [0, 1]")]
    LambdaOutOfRange(f64),

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("grid mismatch between fields")]
    GridMismatch,

    #[error("null field")]
    NullField,

    #[error("null amplitude")]
    NullAmplitude,

    #[error("coefficients not normalized: |a|^2 + |b|^2 = {0}")]
    NotNormalized(f64),

    #[error("norm drift {drift:e} exceeds tolerance {tolerance:e} at step {step}")]
    NormDrift {
        step: usize,
        drift: f64,
        tolerance: f64,
    },

    #[error("non-finite value encountered at step {step}")]
    NonFinite { step: usize },

    #[error("stationary solver did not converge after {iterations} iterations (last |dE| = {last_delta:e})")]
    NonConvergence { iterations: usize, last_delta: f64 },

    #[error("undefined scale at Bohmian rest")]
    BohmianRest,

    #[error("classically forbidden: radicand {0}")]
    ClassicallyForbidden(f64),

    #[error("zero total probability mass")]
    ZeroMass,

    #[error("branches not separated: min center distance {distance} <= 3 x width {width}")]
    BranchesNotSeparated { distance: f64, width: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if (0.0..=1.0).contains(&lambda) {
        Ok(())
    } else {
        Err(Error::LambdaOutOfRange(lambda))
    }
}
