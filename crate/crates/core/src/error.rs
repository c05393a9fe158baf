//! Error types shared across the crate.

use thiserror::Error;

/// Errors raised by validation, estimation, and minimization.
#[derive(Debug, Error)]
pub enum Error {
    #[error("probability {value} lies outside [0, 1] beyond tolerance {tolerance}")]
    ProbabilityOutOfRange { value: f64, tolerance: f64 },

    #[error("intensities must satisfy 0 < decoy < signal, got decoy {decoy}, signal {signal}")]
    InvalidIntensities { decoy: f64, signal: f64 },

    #[error("invalid channel parameter {name} = {value}")]
    InvalidChannelParam { name: &'static str, value: f64 },

    #[error("series cutoff {cutoff} below minimum {minimum}")]
    CutoffTooSmall { cutoff: usize, minimum: usize },

    #[error(
        "closed form {closed} and truncated series {series} disagree beyond tail bound {bound}"
    )]
    SeriesMismatch {
        closed: f64,
        series: f64,
        bound: f64,
    },

    #[error("series weight at ({i}, {j}) is {value}, expected positive")]
    NonPositiveWeight { i: usize, j: usize, value: f64 },

    #[error("yield table: {0}")]
    InvalidTable(String),

    #[error("table cutoff {cutoff} insufficient: Poisson tail bound {tail:e} exceeds {limit:e}")]
    InsufficientCutoff {
        cutoff: usize,
        tail: f64,
        limit: f64,
    },

    #[error("observables: {0}")]
    InvalidObservables(String),

    #[error("single-photon yield lower bound vanished: no key material")]
    NoKey,

    #[error("yield lower bound must be positive, got {value}")]
    NonPositiveYield { value: f64 },

    #[error("minimization instance: {0}")]
    InvalidMinProblem(String),

    #[error("feasible set is empty or the entropy argument reaches 1/2 at the solution")]
    InfeasibleDomain,

    #[error("grid resolution {resolution} below minimum {minimum}")]
    ResolutionTooSmall { resolution: usize, minimum: usize },

    #[error("no feasible point on the evaluation grid")]
    EmptyFeasibleGrid,

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
