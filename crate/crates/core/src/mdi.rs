//! Three-intensity decoy-state estimation for MDI-QKD: background-subtracted
//! pair statistics, single-photon-pair bounds, the global
//! privacy-amplification bound, and the key rate.
//!
//! Both senders use vacuum, decoy and signal intensities. Subtracting the
//! vacuum rows and columns from each observed gain leaves sums over
//! `i, j >= 1` only; three of those pin `Y11` up to a positively weighted
//! aggregate of the `i + j >= 4` terms, mirroring the BB84 reduction with
//! the correction `delta` in place of `theta`. Yields and error rates are
//! not distinguished by basis here, which is exact in the asymptotic
//! setting.

use crate::channel::{MdiIntensities, MdiObservables};
use crate::entropy::{binary_entropy, pi_coefficient, SeriesCoefficient, DEFAULT_SERIES_ORDER};
use crate::error::{Error, Result};
use crate::minimizer::MinProblem;
use crate::scalar::{real, Real};
use crate::{Estimate, EstimationMode, KeyRate};

/// Background-subtracted statistics
/// `tilde_Q = Q + e^-(m1+m2) Q_00 - e^-m1 Q_0,m2 - e^-m2 Q_m1,0`
/// for the four signal/decoy intensity pairs, and the same combination of
/// the error gains.
///
/// Equals the pure `i, j >= 1` part of the double Poisson sum, so every
/// entry is nonnegative for consistent data; negatives are flagged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MdiTildeStats<T> {
    pub gain_mu_mu: T,
    pub gain_mu_nu: T,
    pub gain_nu_mu: T,
    pub gain_nu_nu: T,
    pub error_gain_mu_mu: T,
    pub error_gain_mu_nu: T,
    pub error_gain_nu_mu: T,
    pub error_gain_nu_nu: T,
    /// Some entry came out negative: the input data are inconsistent with
    /// any photon-number model.
    pub has_negative: bool,
}

/// Background-subtract the nine observed pairs into the four tilde pairs.
pub fn tilde_stats<T: Real>(obs: &MdiObservables<T>) -> MdiTildeStats<T> {
    let ints = &obs.intensities;
    let combine = |direct: T, vac_a: T, vac_b: T, vac_both: T, m1: T, m2: T| {
        direct + (-(m1 + m2)).exp() * vac_both - (-m1).exp() * vac_a - (-m2).exp() * vac_b
    };
    let g = &obs.gain;
    let eg = &obs.error_gain;
    let stats = MdiTildeStats {
        gain_mu_mu: combine(
            g.mu_mu,
            g.zero_mu,
            g.mu_zero,
            g.zero_zero,
            ints.mu_a,
            ints.mu_b,
        ),
        gain_mu_nu: combine(
            g.mu_nu,
            g.zero_nu,
            g.mu_zero,
            g.zero_zero,
            ints.mu_a,
            ints.nu_b,
        ),
        gain_nu_mu: combine(
            g.nu_mu,
            g.zero_mu,
            g.nu_zero,
            g.zero_zero,
            ints.nu_a,
            ints.mu_b,
        ),
        gain_nu_nu: combine(
            g.nu_nu,
            g.zero_nu,
            g.nu_zero,
            g.zero_zero,
            ints.nu_a,
            ints.nu_b,
        ),
        error_gain_mu_mu: combine(
            eg.mu_mu,
            eg.zero_mu,
            eg.mu_zero,
            eg.zero_zero,
            ints.mu_a,
            ints.mu_b,
        ),
        error_gain_mu_nu: combine(
            eg.mu_nu,
            eg.zero_nu,
            eg.mu_zero,
            eg.zero_zero,
            ints.mu_a,
            ints.nu_b,
        ),
        error_gain_nu_mu: combine(
            eg.nu_mu,
            eg.zero_mu,
            eg.nu_zero,
            eg.zero_zero,
            ints.nu_a,
            ints.mu_b,
        ),
        error_gain_nu_nu: combine(
            eg.nu_nu,
            eg.zero_nu,
            eg.nu_zero,
            eg.zero_zero,
            ints.nu_a,
            ints.nu_b,
        ),
        has_negative: false,
    };
    let has_negative = [
        stats.gain_mu_mu,
        stats.gain_mu_nu,
        stats.gain_nu_mu,
        stats.gain_nu_nu,
        stats.error_gain_mu_mu,
        stats.error_gain_mu_nu,
        stats.error_gain_nu_mu,
        stats.error_gain_nu_nu,
    ]
    .iter()
    .any(|&v| v < T::zero());
    MdiTildeStats {
        has_negative,
        ..stats
    }
}

/// The three-term linear combination that isolates the `(1, 1)` entry from
/// the decoy-side tilde statistics.
fn y11_combination<T: Real>(ints: &MdiIntensities<T>, nu_nu: T, mu_nu: T, nu_mu: T) -> T {
    let (mu_a, nu_a, mu_b, nu_b) = (ints.mu_a, ints.nu_a, ints.mu_b, ints.nu_b);
    let da = mu_a - nu_a;
    let db = mu_b - nu_b;
    ((nu_a + nu_b).exp() * (mu_a * mu_b - nu_a * nu_b) / (nu_a * nu_b) * nu_nu
        - (mu_a + nu_b).exp() * nu_a * db / (mu_a * nu_b) * mu_nu
        - (nu_a + mu_b).exp() * nu_b * da / (nu_a * mu_b) * nu_mu)
        / (da * db)
}

/// Lower bound on the single-photon-pair yield `Y11`; exact when the
/// channel has no `i + j >= 4` contributions. Negative raw values clamp to
/// zero (the no-key signal).
pub fn y11_lower<T: Real>(stats: &MdiTildeStats<T>, ints: &MdiIntensities<T>) -> Estimate<T> {
    let raw = y11_combination(ints, stats.gain_nu_nu, stats.gain_mu_nu, stats.gain_nu_mu);
    Estimate {
        value: raw.max(T::zero()),
        clamped: raw < T::zero(),
    }
}

/// Lower bound on the error mass `e11 Y11`: the same combination applied to
/// the tilde error gains. The value is left unclamped; a negative result is
/// flagged.
pub fn e11y11_lower<T: Real>(stats: &MdiTildeStats<T>, ints: &MdiIntensities<T>) -> Estimate<T> {
    let raw = y11_combination(
        ints,
        stats.error_gain_nu_nu,
        stats.error_gain_mu_nu,
        stats.error_gain_nu_mu,
    );
    Estimate {
        value: raw,
        clamped: raw < T::zero(),
    }
}

/// Upper bound on the single-photon-pair error rate:
/// `e11^U = e^(nu_a+nu_b) tilde_EQ_nunu / (nu_a nu_b Y11^L)`, clamped into
/// `[0, 1/2]` with the marker set on saturation.
pub fn e11_upper<T: Real>(
    stats: &MdiTildeStats<T>,
    y11_lower: T,
    ints: &MdiIntensities<T>,
) -> Result<Estimate<T>> {
    if y11_lower <= T::zero() {
        return Err(Error::NonPositiveYield {
            value: y11_lower.to_f64().unwrap_or(f64::NAN),
        });
    }
    let raw = (ints.nu_a + ints.nu_b).exp() * stats.error_gain_nu_nu
        / (ints.nu_a * ints.nu_b * y11_lower);
    let half = real::<T>(0.5);
    Ok(Estimate {
        value: raw.max(T::zero()).min(half),
        clamped: raw < T::zero() || raw > half,
    })
}

/// Full MDI bound set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MdiBounds<T> {
    /// `Y11^L`, the separate yield lower bound.
    pub y11_lower: T,
    /// `(e11 Y11)^L`, the error-mass lower bound.
    pub e11y11_lower: T,
    /// `e11^U`, the separate error-rate upper bound.
    pub e11_upper: T,
    /// `delta = e11^U Y11^L - (e11 Y11)^L`, the QBER-side yield correction.
    pub delta: T,
    /// `Y11^G = Y11^L + delta`.
    pub y11_global: T,
    /// `e11^G = e11^U Y11^L / Y11^G`.
    pub e11_global: T,
    /// Aggregate-state weight `Pi` for the minimizer identity.
    pub pi: SeriesCoefficient<T>,
    /// `Y11^L [1 - H(e11^U)]`, floored at zero.
    pub pa_separate: T,
    /// `Y11^G [1 - H(e11^G)]`, floored at zero.
    pub pa_global: T,
    pub delta_clamped: bool,
    pub error_saturated: bool,
}

impl<T: Real> MdiBounds<T> {
    /// The border-minimization instance this bound set solves:
    /// `A = Y11^L`, `B = (e11 Y11)^L`, `C = Pi`, `D = e11^U Y11^L`, `E = A`.
    /// Valid whenever `delta < Pi`.
    pub fn min_problem(&self) -> Result<MinProblem<T>> {
        MinProblem::without_floor(
            self.y11_lower,
            self.e11y11_lower,
            self.pi.value,
            self.e11_upper * self.y11_lower,
        )
    }
}

/// Compute the full MDI bound set from tilde statistics.
///
/// Errors with [`Error::NoKey`] when the yield lower bound clamps to zero.
/// A negative `delta` (inconsistent external data) clamps to zero with the
/// marker set, degrading the global bound to the separate one.
pub fn global_bound_mdi<T: Real>(
    stats: &MdiTildeStats<T>,
    ints: &MdiIntensities<T>,
) -> Result<MdiBounds<T>> {
    let y11l = y11_lower(stats, ints);
    if y11l.value <= T::zero() {
        return Err(Error::NoKey);
    }
    let mass = e11y11_lower(stats, ints);
    let e11u = e11_upper(stats, y11l.value, ints)?;
    let raw_delta = e11u.value * y11l.value - mass.value;
    let delta = raw_delta.max(T::zero());
    let y11g = y11l.value + delta;
    let e11g = e11u.value * y11l.value / y11g;
    let pi = pi_coefficient(
        ints.mu_a,
        ints.nu_a,
        ints.mu_b,
        ints.nu_b,
        DEFAULT_SERIES_ORDER,
    )?;
    let pa = |y: T, e: T| -> Result<T> { Ok((y * (T::one() - binary_entropy(e)?)).max(T::zero())) };
    Ok(MdiBounds {
        y11_lower: y11l.value,
        e11y11_lower: mass.value,
        e11_upper: e11u.value,
        delta,
        y11_global: y11g,
        e11_global: e11g,
        pi,
        pa_separate: pa(y11l.value, e11u.value)?,
        pa_global: pa(y11g, e11g)?,
        delta_clamped: raw_delta < T::zero(),
        error_saturated: e11u.clamped,
    })
}

/// Secure key rate `R = p11 * PA - Q_mumu f H(E_mumu)` with the Poissonian
/// single-photon-pair fraction `p11 = mu_a e^-mu_a mu_b e^-mu_b`.
pub fn key_rate_mdi<T: Real>(
    obs: &MdiObservables<T>,
    bounds: &MdiBounds<T>,
    error_correction: T,
    mode: EstimationMode,
) -> Result<KeyRate<T>> {
    let pa = match mode {
        EstimationMode::Separate => bounds.pa_separate,
        EstimationMode::Global => bounds.pa_global,
    };
    key_rate_from_pa(obs, pa, error_correction)
}

/// Key rate with the privacy amplification term from ground-truth
/// single-photon-pair statistics.
pub fn key_rate_mdi_asymptotic<T: Real>(
    obs: &MdiObservables<T>,
    y11_true: T,
    e11_true: T,
    error_correction: T,
) -> Result<KeyRate<T>> {
    let pa = (y11_true * (T::one() - binary_entropy(e11_true)?)).max(T::zero());
    key_rate_from_pa(obs, pa, error_correction)
}

fn key_rate_from_pa<T: Real>(
    obs: &MdiObservables<T>,
    pa: T,
    error_correction: T,
) -> Result<KeyRate<T>> {
    let ints = &obs.intensities;
    let p11 = ints.mu_a * (-ints.mu_a).exp() * ints.mu_b * (-ints.mu_b).exp();
    let q = obs.gain.mu_mu;
    let qber = if q > T::zero() {
        obs.error_gain.mu_mu / q
    } else {
        T::zero()
    };
    let raw = p11 * pa - q * error_correction * binary_entropy(qber)?;
    Ok(KeyRate {
        rate: raw.max(T::zero()),
        below_threshold: raw < T::zero(),
    })
}
