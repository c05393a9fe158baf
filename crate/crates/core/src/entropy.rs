//! Shared numeric primitives: binary entropy and the truncated series
//! coefficients that weight the aggregate multiphoton state.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{real, Real};

/// Absolute tolerance for clamping near-boundary entropy arguments before
/// rejecting them. Estimator output carries floating-point residue that must
/// not abort a sweep.
pub const PROBABILITY_TOLERANCE: f64 = 1e-12;

/// Default truncation order for the intensity series. Factorial decay makes
/// the analytic remainder negligible for intensities at most 1.
pub const DEFAULT_SERIES_ORDER: usize = 30;

/// Binary Shannon entropy `H(x) = -x log2 x - (1-x) log2 (1-x)`, with the
/// limit convention `0 log2 0 = 0`.
///
/// Inputs within [`PROBABILITY_TOLERANCE`] of the unit interval are clamped
/// onto it; anything further out is a domain error. The result lies in
/// `[0, 1]` and satisfies `H(x) = H(1-x)`.
pub fn binary_entropy<T: Real>(x: T) -> Result<T> {
    let tol = real::<T>(PROBABILITY_TOLERANCE);
    if x < -tol || x > T::one() + tol {
        return Err(Error::ProbabilityOutOfRange {
            value: x.to_f64().unwrap_or(f64::NAN),
            tolerance: PROBABILITY_TOLERANCE,
        });
    }
    let x = x.max(T::zero()).min(T::one());
    let h = plogp(x) + plogp(T::one() - x);
    Ok(h.max(T::zero()).min(T::one()))
}

/// `-p log2 p` with the zero-limit convention.
fn plogp<T: Real>(p: T) -> T {
    if p == T::zero() {
        T::zero()
    } else {
        -(p * p.ln()) / T::LN_2()
    }
}

/// A truncated series value together with its truncation order and a bound
/// on everything the truncation left out.
///
/// `tail_bound` majorizes the analytic remainder of the infinite sum plus
/// the floating-point slack of both evaluation routes, so
/// `value ± tail_bound` brackets the true sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesCoefficient<T> {
    pub value: T,
    pub truncation_order: usize,
    pub tail_bound: T,
}

/// Series weight of the i-photon term in the three-intensity reduction:
/// `(mu^(i-1) nu - nu^(i-1) mu) / (i! (mu - nu))`, positive for `i >= 3`.
fn omega_weight<T: Real>(i: usize, mu: T, nu: T, factorial_i: T) -> T {
    (mu.powi(i as i32 - 1) * nu - nu.powi(i as i32 - 1) * mu) / (factorial_i * (mu - nu))
}

/// Total weight of the aggregate state folding all yields of order three
/// and higher into one unknown: the sum of the per-order weights over
/// `i >= 3`.
///
/// Evaluated as a truncated series at [`DEFAULT_SERIES_ORDER`] and
/// cross-checked against the closed form
/// `[nu (e^mu - 1 - mu - mu^2/2)/mu - mu (e^nu - 1 - nu - nu^2/2)/nu] / (mu - nu)`;
/// disagreement beyond the reported tail bound is an error.
pub fn omega_coefficient<T: Real>(mu: T, nu: T) -> Result<SeriesCoefficient<T>> {
    omega_coefficient_with_order(mu, nu, DEFAULT_SERIES_ORDER)
}

/// [`omega_coefficient`] at an explicit truncation order (at least 3).
pub fn omega_coefficient_with_order<T: Real>(
    mu: T,
    nu: T,
    order: usize,
) -> Result<SeriesCoefficient<T>> {
    validate_intensity_pair(mu, nu)?;
    if order < 3 {
        return Err(Error::CutoffTooSmall {
            cutoff: order,
            minimum: 3,
        });
    }

    let mut series = T::zero();
    let mut factorial = real::<T>(2.0); // 2!
    for i in 3..=order {
        factorial = factorial * real::<T>(i as f64);
        series = series + omega_weight(i, mu, nu, factorial);
    }

    let two = real::<T>(2.0);
    let reduced = |z: T| (z.exp() - T::one() - z - z * z / two) / z;
    let closed = (nu * reduced(mu) - mu * reduced(nu)) / (mu - nu);

    // Remainder of sum_{i>order} mu^(i-1) nu / (i! (mu-nu)) via the
    // exponential tail, plus float slack for the cancellations in the
    // closed form.
    let analytic_tail = nu / (mu * (mu - nu)) * exp_series_tail(mu, order);
    let fp_slack =
        T::epsilon() * real::<T>(8.0) * (nu * mu.exp() / mu + mu * nu.exp() / nu) / (mu - nu);
    let tail_bound = analytic_tail + fp_slack;

    if (closed - series).abs() > tail_bound {
        return Err(Error::SeriesMismatch {
            closed: closed.to_f64().unwrap_or(f64::NAN),
            series: series.to_f64().unwrap_or(f64::NAN),
            bound: tail_bound.to_f64().unwrap_or(f64::NAN),
        });
    }

    Ok(SeriesCoefficient {
        value: series,
        truncation_order: order,
        tail_bound,
    })
}

/// Pairwise series weight of the (i, j)-photon term in the two-party
/// three-intensity reduction:
///
/// `nu_a^(i-1) mu_b^(j-1) nu_b (mu_a - nu_a)
///  + mu_a^(i-1) nu_b^(j-1) nu_a (mu_b - nu_b)
///  - nu_a^(i-1) nu_b^(j-1) (mu_a mu_b - nu_a nu_b)`
///
/// Vanishes for `i + j = 3` and is strictly positive for `i, j >= 1` with
/// `i + j >= 4`.
pub fn upsilon_weight<T: Real>(i: usize, j: usize, mu_a: T, nu_a: T, mu_b: T, nu_b: T) -> T {
    let pa = |base: T| base.powi(i as i32 - 1);
    let pb = |base: T| base.powi(j as i32 - 1);
    pa(nu_a) * pb(mu_b) * nu_b * (mu_a - nu_a) + pa(mu_a) * pb(nu_b) * nu_a * (mu_b - nu_b)
        - pa(nu_a) * pb(nu_b) * (mu_a * mu_b - nu_a * nu_b)
}

/// Total weight of the two-party aggregate state: the sum of
/// `upsilon_weight(i, j) / (i! j! (mu_a - nu_a)(mu_b - nu_b))` over
/// `i, j >= 1` with `4 <= i + j <= cutoff`.
///
/// The tail bound majorizes every dropped weight by
/// `3 mu_a^i mu_b^j` (each of the three parts of the weight is at most
/// `mu_a^i mu_b^j` in magnitude), which collapses the remainder into an
/// exponential tail in `mu_a + mu_b`. Every included weight is checked
/// positive.
pub fn pi_coefficient<T: Real>(
    mu_a: T,
    nu_a: T,
    mu_b: T,
    nu_b: T,
    cutoff: usize,
) -> Result<SeriesCoefficient<T>> {
    validate_intensity_pair(mu_a, nu_a)?;
    validate_intensity_pair(mu_b, nu_b)?;
    if cutoff < 4 {
        return Err(Error::CutoffTooSmall { cutoff, minimum: 4 });
    }

    let denom = (mu_a - nu_a) * (mu_b - nu_b);
    let factorials = factorial_table::<T>(cutoff);

    let mut sum = T::zero();
    for i in 1..cutoff {
        for j in 1..=(cutoff - i) {
            if i + j < 4 {
                continue;
            }
            let weight = upsilon_weight(i, j, mu_a, nu_a, mu_b, nu_b);
            if weight <= T::zero() {
                return Err(Error::NonPositiveWeight {
                    i,
                    j,
                    value: weight.to_f64().unwrap_or(f64::NAN),
                });
            }
            sum = sum + weight / (factorials[i] * factorials[j] * denom);
        }
    }

    let z = mu_a + mu_b;
    let analytic_tail = real::<T>(3.0) / denom * exp_series_tail(z, cutoff);
    let fp_slack = T::epsilon() * real::<T>(24.0) * z.exp() / denom;

    Ok(SeriesCoefficient {
        value: sum,
        truncation_order: cutoff,
        tail_bound: analytic_tail + fp_slack,
    })
}

/// Upper bound on `sum_{s > order} z^s / s!` via the geometric majorant
/// `z^(order+1)/(order+1)! * 1/(1 - z/(order+2))`; requires `z < order + 2`.
fn exp_series_tail<T: Real>(z: T, order: usize) -> T {
    let mut lead = T::one();
    for s in 1..=(order + 1) {
        lead = lead * z / real::<T>(s as f64);
    }
    lead / (T::one() - z / real::<T>((order + 2) as f64))
}

/// `0! ..= n!` as scalars.
fn factorial_table<T: Real>(n: usize) -> Vec<T> {
    let mut table = Vec::with_capacity(n + 1);
    let mut acc = T::one();
    table.push(acc);
    for i in 1..=n {
        acc = acc * real::<T>(i as f64);
        table.push(acc);
    }
    table
}

pub(crate) fn validate_intensity_pair<T: Real>(mu: T, nu: T) -> Result<()> {
    if !(nu > T::zero() && nu < mu) || !mu.is_finite() {
        return Err(Error::InvalidIntensities {
            decoy: nu.to_f64().unwrap_or(f64::NAN),
            signal: mu.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(())
}
