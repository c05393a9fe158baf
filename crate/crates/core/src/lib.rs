//! Decoy-state QKD secure-key-rate bounds.
//!
//! Three-intensity decoy-state estimation of the single-photon privacy
//! amplification term `Y1 * (1 - H(e1))` (BB84) and `Y11 * (1 - H(e11))`
//! (MDI-QKD), in two modes:
//!
//! * **separate** — the conventional route: a lower bound on the
//!   single-photon yield from the gain equations and an upper bound on the
//!   single-photon error rate from the QBER equations, each optimized on
//!   its own;
//! * **global** — the privacy amplification term minimized as one bivariate
//!   function of the aggregate multiphoton state's yield and error rate,
//!   which recovers yield information the QBER equations carry and the
//!   separate route discards.
//!
//! The global minimum reduces to a closed form over the border of the
//! feasible square ([`minimizer`]), and both routes are checked against an
//! exhaustive grid search and an asymptotic channel model ([`channel`]).
//!
//! All numerics are generic over the scalar type through the [`Real`]
//! trait; `f64` aliases for the main types sit at the crate root.

#![forbid(unsafe_code)]

pub mod bb84;
pub mod channel;
pub mod entropy;
pub mod error;
pub mod mdi;
pub mod minimizer;
pub mod scalar;

pub use crate::bb84::Bb84Bounds;
pub use crate::channel::{
    Bb84Observables, ChannelParams, MdiIntensities, MdiObservables, PhotonYieldTable,
};
pub use crate::entropy::{binary_entropy, SeriesCoefficient};
pub use crate::error::{Error, Result};
pub use crate::mdi::{MdiBounds, MdiTildeStats};
pub use crate::minimizer::{MinProblem, MinSolution};
pub use crate::scalar::Real;

/// Which privacy amplification estimate feeds the key rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimationMode {
    /// Yield lower bound and error-rate upper bound taken independently.
    Separate,
    /// Privacy amplification term minimized as one bivariate function.
    Global,
}

/// A bound value together with a clamp marker.
///
/// Estimators clamp values that leave their physical range (negative
/// yields, error rates beyond 1/2) instead of aborting, so sweeps complete
/// and report where estimates saturate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    /// The raw value fell outside its range and was adjusted (or, for
    /// quantities that stay unclamped, flagged as out of range).
    pub clamped: bool,
}

/// Secure key rate with the below-threshold marker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyRate<T> {
    /// Key rate per signal pulse (pair), floored at zero.
    pub rate: T,
    /// The raw rate was negative: the channel is past the tolerable loss.
    pub below_threshold: bool,
}

/// Channel model parameters over `f64`.
pub type ChannelParams64 = ChannelParams<f64>;
/// BB84 observed statistics over `f64`.
pub type Bb84Observables64 = Bb84Observables<f64>;
/// BB84 bound set over `f64`.
pub type Bb84Bounds64 = Bb84Bounds<f64>;
/// Photon-number-resolved yield table over `f64`.
pub type PhotonYieldTable64 = PhotonYieldTable<f64>;
/// MDI observed statistics over `f64`.
pub type MdiObservables64 = MdiObservables<f64>;
/// MDI bound set over `f64`.
pub type MdiBounds64 = MdiBounds<f64>;
/// Truncated series coefficient over `f64`.
pub type SeriesCoefficient64 = SeriesCoefficient<f64>;
/// Border minimization instance over `f64`.
pub type MinProblem64 = MinProblem<f64>;
/// Border minimization solution over `f64`.
pub type MinSolution64 = MinSolution<f64>;
