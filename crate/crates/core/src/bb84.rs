//! Three-intensity decoy-state estimation for BB84: separate yield/error
//! bounds, the global privacy-amplification bound, and the secure key rate.
//!
//! With vacuum, decoy and signal intensities `0 < upsilon < mu`, the gain
//! equations pin the single-photon yield up to the aggregate multiphoton
//! state, giving the lower bound `Y1^L`; the QBER equations give the error
//! upper bound `e1^U`. The global route keeps the yield information the
//! QBER equations carry — the nonnegative correction `theta` — and
//! evaluates the privacy amplification term at the joint minimizer
//! `(Y1^L + theta, e1^U Y1^L / (Y1^L + theta))` instead of at the two
//! separate extremes.

use crate::channel::Bb84Observables;
use crate::entropy::{binary_entropy, omega_coefficient, SeriesCoefficient};
use crate::error::{Error, Result};
use crate::minimizer::MinProblem;
use crate::scalar::{real, Real};
use crate::{Estimate, EstimationMode, KeyRate};

/// Lower bound on the single-photon yield from the gain equations:
///
/// ```text
/// Y1^L = mu/(up(mu-up)) (e^up Q_up - Y0) - up/(mu(mu-up)) (e^mu Q_mu - Y0)
/// ```
///
/// Negative raw values (inconsistent external data) clamp to zero; a zero
/// result is the no-key signal.
pub fn y1_lower<T: Real>(obs: &Bb84Observables<T>) -> Estimate<T> {
    let (mu, up) = (obs.mu, obs.upsilon);
    let y0 = obs.dark_yield();
    let raw = mu / (up * (mu - up)) * (up.exp() * obs.gain.upsilon - y0)
        - up / (mu * (mu - up)) * (mu.exp() * obs.gain.mu - y0);
    Estimate {
        value: raw.max(T::zero()),
        clamped: raw < T::zero(),
    }
}

/// Upper bound on the single-photon error rate from the decoy QBER
/// equation: `e1^U = (e^up E_up Q_up - e0 Y0) / (up Y1^L)`, clamped into
/// `[0, 1/2]` with the clamp marker set on saturation.
pub fn e1_upper<T: Real>(obs: &Bb84Observables<T>, y1_lower: T) -> Result<Estimate<T>> {
    if y1_lower <= T::zero() {
        return Err(Error::NonPositiveYield {
            value: y1_lower.to_f64().unwrap_or(f64::NAN),
        });
    }
    let up = obs.upsilon;
    let raw = (up.exp() * obs.error_gain.upsilon - obs.dark_error_gain()) / (up * y1_lower);
    let half = real::<T>(0.5);
    Ok(Estimate {
        value: raw.max(T::zero()).min(half),
        clamped: raw < T::zero() || raw > half,
    })
}

/// Yield information carried by the QBER equations and discarded by the
/// separate estimation:
///
/// ```text
/// theta = [up (e^mu E_mu Q_mu - e0 Y0) - mu (e^up E_up Q_up - e0 Y0)] / (mu(mu-up))
/// ```
///
/// Nonnegative for statistics produced by any photon-number channel model;
/// negative values from inconsistent external data clamp to zero (the
/// global bound then degrades to the separate one).
pub fn theta<T: Real>(obs: &Bb84Observables<T>) -> Estimate<T> {
    let (mu, up) = (obs.mu, obs.upsilon);
    let e0y0 = obs.dark_error_gain();
    let raw = (up * (mu.exp() * obs.error_gain.mu - e0y0)
        - mu * (up.exp() * obs.error_gain.upsilon - e0y0))
        / (mu * (mu - up));
    Estimate {
        value: raw.max(T::zero()),
        clamped: raw < T::zero(),
    }
}

/// Full BB84 bound set: separate bounds, the global minimizer, and both
/// privacy amplification terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bb84Bounds<T> {
    /// `Y1^L`, the separate yield lower bound.
    pub y1_lower: T,
    /// `e1^U`, the separate error-rate upper bound.
    pub e1_upper: T,
    /// `theta`, the QBER-side yield correction.
    pub theta: T,
    /// `Y1^G = Y1^L + theta`.
    pub y1_global: T,
    /// `e1^G = e1^U Y1^L / Y1^G`.
    pub e1_global: T,
    /// Aggregate-state weight `Omega` for the minimizer identity.
    pub omega: SeriesCoefficient<T>,
    /// `Y1^L [1 - H(e1^U)]`, floored at zero.
    pub pa_separate: T,
    /// `Y1^G [1 - H(e1^G)]`, floored at zero.
    pub pa_global: T,
    pub theta_clamped: bool,
    pub error_saturated: bool,
}

impl<T: Real> Bb84Bounds<T> {
    /// The border-minimization instance this bound set solves:
    /// `A = Y1^L`, `B = e1^U Y1^L - theta`, `C = Omega`,
    /// `D = e1^U Y1^L`, `E = A`.
    pub fn min_problem(&self) -> Result<MinProblem<T>> {
        let cap = self.e1_upper * self.y1_lower;
        MinProblem::without_floor(self.y1_lower, cap - self.theta, self.omega.value, cap)
    }
}

/// Compute the full bound set from observed statistics.
///
/// Errors with [`Error::NoKey`] when the yield lower bound clamps to zero.
pub fn global_bound_bb84<T: Real>(obs: &Bb84Observables<T>) -> Result<Bb84Bounds<T>> {
    let y1l = y1_lower(obs);
    if y1l.value <= T::zero() {
        return Err(Error::NoKey);
    }
    let e1u = e1_upper(obs, y1l.value)?;
    let th = theta(obs);
    let y1g = y1l.value + th.value;
    let e1g = e1u.value * y1l.value / y1g;
    let omega = omega_coefficient(obs.mu, obs.upsilon)?;
    let pa = |y: T, e: T| -> Result<T> { Ok((y * (T::one() - binary_entropy(e)?)).max(T::zero())) };
    Ok(Bb84Bounds {
        y1_lower: y1l.value,
        e1_upper: e1u.value,
        theta: th.value,
        y1_global: y1g,
        e1_global: e1g,
        omega,
        pa_separate: pa(y1l.value, e1u.value)?,
        pa_global: pa(y1g, e1g)?,
        theta_clamped: th.clamped,
        error_saturated: e1u.clamped,
    })
}

/// Secure key rate `R = p1 * PA - Q_mu f H(E_mu)` with the Poissonian
/// single-photon fraction `p1 = mu e^-mu` and PA selected by `mode`.
/// Negative rates report as zero with the below-threshold marker.
pub fn key_rate_bb84<T: Real>(
    obs: &Bb84Observables<T>,
    bounds: &Bb84Bounds<T>,
    error_correction: T,
    mode: EstimationMode,
) -> Result<KeyRate<T>> {
    let pa = match mode {
        EstimationMode::Separate => bounds.pa_separate,
        EstimationMode::Global => bounds.pa_global,
    };
    key_rate_from_pa(obs, pa, error_correction)
}

/// Key rate with the privacy amplification term taken from ground-truth
/// single-photon statistics — the infinite-decoy asymptotic reference.
pub fn key_rate_bb84_asymptotic<T: Real>(
    obs: &Bb84Observables<T>,
    y1_true: T,
    e1_true: T,
    error_correction: T,
) -> Result<KeyRate<T>> {
    let pa = (y1_true * (T::one() - binary_entropy(e1_true)?)).max(T::zero());
    key_rate_from_pa(obs, pa, error_correction)
}

fn key_rate_from_pa<T: Real>(
    obs: &Bb84Observables<T>,
    pa: T,
    error_correction: T,
) -> Result<KeyRate<T>> {
    let mu = obs.mu;
    let p1 = mu * (-mu).exp();
    let q = obs.gain.mu;
    let qber = if q > T::zero() {
        obs.error_gain.mu / q
    } else {
        T::zero()
    };
    let raw = p1 * pa - q * error_correction * binary_entropy(qber)?;
    Ok(KeyRate {
        rate: raw.max(T::zero()),
        below_threshold: raw < T::zero(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{
        bb84_observables, bb84_true_single_photon, poisson_weights, ChannelParams, IntensityGains,
    };
    use crate::minimizer::corollary_min;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn obs_20db() -> Bb84Observables<f64> {
        bb84_observables(&ChannelParams::with_loss_db(20.0), 0.1, 0.5).unwrap()
    }

    /// Observables synthesized from explicit yield and error-rate vectors
    /// through the gain and QBER equations.
    fn obs_from_yields(
        yields: &[f64],
        error_rates: &[f64],
        upsilon: f64,
        mu: f64,
    ) -> Bb84Observables<f64> {
        let fold = |nu: f64, weight: &dyn Fn(usize) -> f64| -> f64 {
            poisson_weights(nu, yields.len() - 1)
                .iter()
                .enumerate()
                .map(|(i, w)| w * weight(i))
                .sum()
        };
        let q = |nu: f64| fold(nu, &|i| yields[i]);
        let eq = |nu: f64| fold(nu, &|i| error_rates[i] * yields[i]);
        Bb84Observables {
            upsilon,
            mu,
            gain: IntensityGains {
                omega: yields[0],
                upsilon: q(upsilon),
                mu: q(mu),
            },
            error_gain: IntensityGains {
                omega: error_rates[0] * yields[0],
                upsilon: eq(upsilon),
                mu: eq(mu),
            },
        }
    }

    #[test]
    fn y1_lower_spot_value() {
        // Independent high-precision evaluation on the 20 dB model:
        // 0.009699186465551254.
        let got = y1_lower(&obs_20db());
        assert!(!got.clamped);
        assert!((got.value - 0.009699186465551254).abs() < 1e-15);
    }

    #[test]
    fn y1_lower_exact_for_single_photon_channel() {
        let c = 0.137;
        let mut yields = vec![0.0; 12];
        yields[0] = 2e-5;
        yields[1] = c;
        let errors = vec![0.0; 12];
        let obs = obs_from_yields(&yields, &errors, 0.1, 0.5);
        let got = y1_lower(&obs);
        assert!((got.value - c).abs() < 1e-15);
    }

    #[test]
    fn y1_lower_zero_signal_is_no_key() {
        // Only the vacuum component ever clicks: Y_i = Y_0 delta_i0, so
        // Q_nu = e^-nu Y_0 and the measured part of Y_1 vanishes up to
        // float residue.
        let y0 = 3e-6;
        let mut yields = vec![0.0; 12];
        yields[0] = y0;
        let mut errors = vec![0.0; 12];
        errors[0] = 0.5;
        let obs = obs_from_yields(&yields, &errors, 0.1, 0.5);
        assert!(y1_lower(&obs).value < 1e-15);

        // A dead detector gives the exact zero and the no-key signal.
        let dead = obs_from_yields(&[0.0; 12], &[0.0; 12], 0.1, 0.5);
        let got = y1_lower(&dead);
        assert_eq!(got.value, 0.0);
        assert!(matches!(global_bound_bb84(&dead), Err(Error::NoKey)));
    }

    #[test]
    fn e1_upper_spot_value() {
        let obs = obs_20db();
        let y1l = y1_lower(&obs).value;
        let got = e1_upper(&obs, y1l).unwrap();
        assert!(!got.clamped);
        assert!((got.value - 0.01724581147914722).abs() < 1e-15);
    }

    #[test]
    fn e1_upper_noiseless_is_zero() {
        let params = ChannelParams {
            loss_db: 20.0,
            dark_count: 0.0,
            misalignment: 0.0,
            ..ChannelParams::default()
        };
        let obs = bb84_observables(&params, 0.1, 0.5).unwrap();
        let y1l = y1_lower(&obs).value;
        assert_eq!(e1_upper(&obs, y1l).unwrap().value, 0.0);
    }

    #[test]
    fn e1_upper_rejects_nonpositive_yield() {
        assert!(matches!(
            e1_upper(&obs_20db(), 0.0),
            Err(Error::NonPositiveYield { .. })
        ));
    }

    #[test]
    fn theta_spot_value() {
        // Independent high-precision evaluation: 2.0341692954657885e-5.
        let got = theta(&obs_20db());
        assert!(!got.clamped);
        assert!((got.value - 2.0341692954657885e-5).abs() < 1e-16);
    }

    #[test]
    fn theta_vanishes_without_multiphoton_errors() {
        let mut yields = vec![0.0; 12];
        yields[0] = 1e-5;
        yields[1] = 0.01;
        let mut errors = vec![0.0; 12];
        errors[0] = 0.5;
        errors[1] = 0.02;
        let obs = obs_from_yields(&yields, &errors, 0.1, 0.5);
        let got = theta(&obs);
        assert!(got.value.abs() < 1e-18);
    }

    /// theta equals its Poisson-basis expansion
    /// `sum_{i>=2} (up mu^i - mu up^i)/(i! mu (mu - up)) e_i Y_i`
    /// over the generating model.
    #[test]
    fn theta_matches_series_expansion_of_model() {
        let params = ChannelParams::<f64>::with_loss_db(20.0);
        let obs = bb84_observables(&params, 0.1, 0.5).unwrap();
        let eta = params.transmittance();
        let (mu, up) = (0.5f64, 0.1f64);
        let mut series = 0.0;
        let mut factorial = 1.0;
        for i in 1..=80usize {
            factorial *= i as f64;
            let ei_yi =
                0.5 * params.dark_count + params.misalignment * (1.0 - (1.0 - eta).powi(i as i32));
            series += (up * mu.powi(i as i32) - mu * up.powi(i as i32))
                / (factorial * mu * (mu - up))
                * ei_yi;
        }
        let got = theta(&obs).value;
        assert!(
            (got - series).abs() < 1e-16,
            "theta {got} vs series {series}"
        );
    }

    #[test]
    fn global_bound_spot_values() {
        let bounds = global_bound_bb84(&obs_20db()).unwrap();
        // Independent evaluation: Y1^G = 0.009719528158505911,
        // e1^G = 0.017209718265964263.
        assert!((bounds.y1_global - 0.009719528158505911).abs() < 1e-8);
        assert!((bounds.e1_global - 0.017209718265964263).abs() < 1e-6);
        assert!((bounds.pa_separate - 0.008480154867346842).abs() < 1e-14);
        assert!((bounds.pa_global - 0.008499986574193182).abs() < 1e-14);
        assert!(bounds.pa_global >= bounds.pa_separate);
        // Consistency identities.
        assert!((bounds.y1_global - (bounds.y1_lower + bounds.theta)).abs() < 1e-12);
        assert!(
            (bounds.e1_global * bounds.y1_global - bounds.e1_upper * bounds.y1_lower).abs() < 1e-12
        );
    }

    #[test]
    fn zero_theta_collapses_global_to_separate() {
        let mut yields = vec![0.0; 12];
        yields[0] = 1e-5;
        yields[1] = 0.01;
        let mut errors = vec![0.0; 12];
        errors[0] = 0.5;
        errors[1] = 0.02;
        let obs = obs_from_yields(&yields, &errors, 0.1, 0.5);
        let bounds = global_bound_bb84(&obs).unwrap();
        assert!((bounds.pa_global - bounds.pa_separate).abs() < 1e-16);
    }

    #[test]
    fn global_bound_matches_corollary_minimum() {
        let bounds = global_bound_bb84(&obs_20db()).unwrap();
        let problem = bounds.min_problem().unwrap();
        let sol = corollary_min(&problem).unwrap();
        assert_eq!(sol.case_id, 1);
        assert!(
            bounds.theta < bounds.omega.value,
            "case 1 requires theta below Omega"
        );
        assert!((sol.value - bounds.pa_global).abs() < 1e-12);
    }

    #[test]
    fn global_bound_sound_against_ground_truth_over_sweep() {
        for tenths in 0..=300 {
            let params = ChannelParams::with_loss_db(tenths as f64 * 0.1);
            let obs = bb84_observables(&params, 0.1, 0.5).unwrap();
            let (y1_true, e1_true) = bb84_true_single_photon(&params).unwrap();
            let bounds = global_bound_bb84(&obs).unwrap();
            let pa_true = y1_true * (1.0 - binary_entropy(e1_true).unwrap());
            assert!(bounds.y1_lower <= bounds.y1_global);
            assert!(bounds.y1_global <= y1_true + 1e-12);
            assert!(e1_true - 1e-12 <= bounds.e1_global);
            assert!(bounds.e1_global <= bounds.e1_upper);
            assert!(bounds.pa_separate <= bounds.pa_global);
            assert!(bounds.pa_global <= pa_true + 1e-12);
        }
    }

    /// Doubling every yield (dark count included) doubles the bound: the
    /// estimator is linear in the observed gains.
    #[test]
    fn y1_lower_scales_linearly_with_yields() {
        let mut rng = StdRng::seed_from_u64(0x5eed_0030);
        for _ in 0..50 {
            let n = 10usize;
            let yields: Vec<f64> = (0..=n).map(|_| rng.random_range(0.0..0.5)).collect();
            let errors: Vec<f64> = (0..=n).map(|_| rng.random_range(0.0..0.5)).collect();
            let doubled: Vec<f64> = yields.iter().map(|y| 2.0 * y).collect();
            let one = y1_lower(&obs_from_yields(&yields, &errors, 0.1, 0.5));
            let two = y1_lower(&obs_from_yields(&doubled, &errors, 0.1, 0.5));
            assert!((two.value - 2.0 * one.value).abs() < 1e-12);
        }
    }

    #[test]
    fn key_rate_spot_value() {
        let obs = obs_20db();
        let bounds = global_bound_bb84(&obs).unwrap();
        // Independent evaluation: R_global = 0.0019171290900344515,
        // R_separate = 0.0019111148209160825.
        let global = key_rate_bb84(&obs, &bounds, 1.16, EstimationMode::Global).unwrap();
        let separate = key_rate_bb84(&obs, &bounds, 1.16, EstimationMode::Separate).unwrap();
        assert!((global.rate - 0.0019171290900344515).abs() < 1e-14);
        assert!((separate.rate - 0.0019111148209160825).abs() < 1e-14);
        assert!(!global.below_threshold);
        let (y1t, e1t) = bb84_true_single_photon(&ChannelParams::with_loss_db(20.0)).unwrap();
        let asymptotic = key_rate_bb84_asymptotic(&obs, y1t, e1t, 1.16).unwrap();
        assert!((asymptotic.rate - 0.0020294269005400544).abs() < 1e-14);
        assert!(separate.rate <= global.rate && global.rate <= asymptotic.rate);
    }

    #[test]
    fn key_rate_zero_when_errors_saturate() {
        // Half of every detection is wrong: e1 saturates at 1/2 and the
        // error-correction cost eats the whole rate.
        let y0 = 1e-5;
        let q_up = 1e-3;
        let q_mu = 5e-3;
        let obs = Bb84Observables {
            upsilon: 0.1,
            mu: 0.5,
            gain: IntensityGains {
                omega: y0,
                upsilon: q_up,
                mu: q_mu,
            },
            error_gain: IntensityGains {
                omega: 0.5 * y0,
                upsilon: 0.5 * q_up,
                mu: 0.5 * q_mu,
            },
        };
        obs.validate().unwrap();
        let bounds = global_bound_bb84(&obs).unwrap();
        assert_eq!(bounds.e1_upper, 0.5);
        assert!(bounds.error_saturated);
        assert_eq!(bounds.pa_separate, 0.0);
        let rate = key_rate_bb84(&obs, &bounds, 1.16, EstimationMode::Global).unwrap();
        assert_eq!(rate.rate, 0.0);
        assert!(rate.below_threshold);
    }

    #[test]
    fn global_rate_dominates_separate_over_sweep() {
        for tenths in 0..=60 {
            let params = ChannelParams::with_loss_db(tenths as f64 * 0.5);
            let obs = bb84_observables(&params, 0.1, 0.5).unwrap();
            let bounds = global_bound_bb84(&obs).unwrap();
            let sep = key_rate_bb84(&obs, &bounds, 1.16, EstimationMode::Separate).unwrap();
            let glob = key_rate_bb84(&obs, &bounds, 1.16, EstimationMode::Global).unwrap();
            assert!(glob.rate >= sep.rate);
        }
    }

    #[test]
    fn external_observables_parse_and_bound() {
        let json = r#"{
            "upsilon": 0.1, "mu": 0.5,
            "Q":  {"omega": 3e-6,   "upsilon": 1.0025e-3,  "mu": 4.99052e-3},
            "EQ": {"omega": 1.5e-6, "upsilon": 1.64925e-5, "mu": 7.63128e-5}
        }"#;
        let obs = Bb84Observables::<f64>::from_json_str(json).unwrap();
        let bounds = global_bound_bb84(&obs).unwrap();
        assert!(bounds.y1_lower > 0.0);
        assert!(bounds.pa_global >= bounds.pa_separate);
    }
}
