use thiserror::Error;

/// Errors produced by the sampling library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("sequence is not strictly increasing at index {index} ({prev} then {next})")]
    NotIncreasing { index: usize, prev: f64, next: f64 },

    #[error("non-finite or non-positive event time {0}")]
    InvalidTime(f64),

    #[error("constraint times must be strictly increasing and lie in (0, 1]: {0}")]
    InvalidConstraints(String),

    #[error("exceeded the cap of {cap} events in a single restricted sample")]
    IterationCap { cap: usize },

    #[error("zero-probability sequence (first zero factor at step {step})")]
    ZeroProbability { step: usize },

    #[error("saturated cdf: 1 - F({gap}) underflowed")]
    SaturatedCdf { gap: f64 },

    #[error("hazard evaluated at t = {t}, which does not follow the last event {last}")]
    NotAfterHistory { t: f64, last: f64 },

    #[error("ensemble died: every weight is zero")]
    EnsembleDied,

    #[error("invalid weight {0}")]
    InvalidWeight(f64),

    #[error("model error: {0}")]
    Model(String),

    #[error("invalid music event: {0}")]
    InvalidEvent(String),

    #[error("corpus error: {0}")]
    Corpus(String),

    #[error("oracle error: {0}")]
    Oracle(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("midi error: {0}")]
    Midi(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
