use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("vector norm is at or below {eps:e}")]
    ZeroVector { eps: f64 },
    #[error("temperature must be positive, got {0}")]
    InvalidTemperature(f64),
    #[error("variance must be positive, got {0}")]
    InvalidVariance(f64),
    #[error("{what} out of range: {value}")]
    OutOfRange { what: &'static str, value: f64 },
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("invalid shape: {0}")]
    InvalidShape(&'static str),
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("cannot draw {requested} negatives from {available} candidates")]
    TooManyNegatives { requested: usize, available: usize },
    #[error("correspondence scores are degenerate (std {std:e})")]
    DegenerateScores { std: f64 },
    #[error("malformed target distribution: {0}")]
    InvalidTarget(&'static str),
    #[error("all sample weights in the batch are zero")]
    AllZeroWeights,
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("forward cache does not match current encoder parameters")]
    StaleCache,
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("labels must contain both clean and faulty instances")]
    DegenerateLabels,
    #[error("not enough samples: {0}")]
    InsufficientSamples(&'static str),
    #[error("invalid histogram range [{lo}, {hi})")]
    InvalidRange { lo: f64, hi: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;
