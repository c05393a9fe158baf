//! Asymptotic channel models: observed gains and error rates for BB84 and
//! MDI-QKD, plus the photon-number-resolved ground truth the estimators are
//! judged against.
//!
//! The BB84 side uses the standard asymptotic model with dark-count yield
//! `Y_0 = p_d`, i-photon yield `Y_i = Y_0 + 1 - (1 - eta)^i` and error gain
//! `e_i Y_i = e_0 Y_0 + e_d (1 - (1 - eta)^i)`, which close to
//! `Q_nu = Y_0 + 1 - exp(-eta nu)` under Poisson photon statistics.
//!
//! The MDI side works from an explicit yield table `Y_{ij}`. The bundled
//! default table is a qualitative product-loss model only; every estimator
//! property holds for any valid table, so nothing downstream depends on the
//! default's physical fidelity.

use serde::{Deserialize, Serialize};

use crate::entropy::validate_intensity_pair;
use crate::error::{Error, Result};
use crate::scalar::{real, Real};

/// Truncation tolerance for the Poisson tail when folding a yield table
/// into observed gains.
pub const MDI_TAIL_TOLERANCE: f64 = 1e-12;

/// Physical channel model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams<T> {
    /// Total channel transmission loss in dB; transmittance is
    /// `10^(-loss_db/10)`.
    pub loss_db: T,
    /// Dark count probability per pulse (`p_d`).
    pub dark_count: T,
    /// Misalignment error probability (`e_d`).
    pub misalignment: T,
    /// Error rate of background events (`e_0`), 1/2 for random background.
    pub background_error: T,
    /// Error correction inefficiency (`f`), at least 1.
    pub error_correction: T,
}

impl<T: Real> Default for ChannelParams<T> {
    fn default() -> Self {
        Self {
            loss_db: T::zero(),
            dark_count: real(3e-6),
            misalignment: real(0.015),
            background_error: real(0.5),
            error_correction: real(1.16),
        }
    }
}

impl<T: Real> ChannelParams<T> {
    /// Default parameters at the given channel loss.
    pub fn with_loss_db(loss_db: T) -> Self {
        Self {
            loss_db,
            ..Self::default()
        }
    }

    /// Channel transmittance `eta = 10^(-loss_db/10)`, in (0, 1].
    pub fn transmittance(&self) -> T {
        real::<T>(10.0).powf(-self.loss_db / real(10.0))
    }

    pub fn validate(&self) -> Result<()> {
        let check = |name: &'static str, value: T, lo: T, hi: T, allow_hi: bool| {
            let ok = value.is_finite() && value >= lo && (value < hi || (allow_hi && value == hi));
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidChannelParam {
                    name,
                    value: value.to_f64().unwrap_or(f64::NAN),
                })
            }
        };
        check("loss_db", self.loss_db, T::zero(), T::infinity(), false)?;
        check("dark_count", self.dark_count, T::zero(), T::one(), false)?;
        check(
            "misalignment",
            self.misalignment,
            T::zero(),
            T::one(),
            false,
        )?;
        check(
            "background_error",
            self.background_error,
            T::zero(),
            T::one(),
            true,
        )?;
        if !(self.error_correction.is_finite() && self.error_correction >= T::one()) {
            return Err(Error::InvalidChannelParam {
                name: "error_correction",
                value: self.error_correction.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(())
    }
}

/// One value per pulse intensity (vacuum, decoy, signal).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntensityGains<T> {
    pub omega: T,
    pub upsilon: T,
    pub mu: T,
}

/// BB84 observed statistics for the three intensities.
///
/// The JSON form is
/// `{"upsilon": .., "mu": .., "Q": {"omega": .., "upsilon": .., "mu": ..}, "EQ": {..}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bb84Observables<T> {
    pub upsilon: T,
    pub mu: T,
    /// Gains `Q_nu`.
    #[serde(rename = "Q")]
    pub gain: IntensityGains<T>,
    /// Error gains `E_nu Q_nu`.
    #[serde(rename = "EQ")]
    pub error_gain: IntensityGains<T>,
}

impl<T: Real> Bb84Observables<T> {
    /// Vacuum yield `Y_0`, identical to the vacuum gain.
    pub fn dark_yield(&self) -> T {
        self.gain.omega
    }

    /// Vacuum error gain `e_0 Y_0`.
    pub fn dark_error_gain(&self) -> T {
        self.error_gain.omega
    }

    pub fn validate(&self) -> Result<()> {
        validate_intensity_pair(self.mu, self.upsilon)?;
        for (q, eq, name) in [
            (self.gain.omega, self.error_gain.omega, "omega"),
            (self.gain.upsilon, self.error_gain.upsilon, "upsilon"),
            (self.gain.mu, self.error_gain.mu, "mu"),
        ] {
            if !(q.is_finite() && eq.is_finite() && T::zero() <= eq && eq <= q && q <= T::one()) {
                return Err(Error::InvalidObservables(format!(
                    "intensity {name}: need 0 <= EQ <= Q <= 1, got Q = {:?}, EQ = {:?}",
                    q, eq
                )));
            }
        }
        Ok(())
    }

    /// Parse and validate from the JSON wire form.
    pub fn from_json_str(json: &str) -> Result<Self>
    where
        T: serde::de::DeserializeOwned,
    {
        let obs: Self = serde_json::from_str(json)?;
        obs.validate()?;
        Ok(obs)
    }
}

/// BB84 observed statistics from the asymptotic channel model.
pub fn bb84_observables<T: Real>(
    params: &ChannelParams<T>,
    upsilon: T,
    mu: T,
) -> Result<Bb84Observables<T>> {
    params.validate()?;
    validate_intensity_pair(mu, upsilon)?;
    let eta = params.transmittance();
    let y0 = params.dark_count;
    let e0y0 = params.background_error * y0;
    // 1 - e^(-eta nu) via expm1; the direct difference loses half the
    // mantissa at high loss.
    let reach = |nu: T| -(-eta * nu).exp_m1();
    let gain = |nu: T| y0 + reach(nu);
    let error_gain = |nu: T| e0y0 + params.misalignment * reach(nu);
    Ok(Bb84Observables {
        upsilon,
        mu,
        gain: IntensityGains {
            omega: y0,
            upsilon: gain(upsilon),
            mu: gain(mu),
        },
        error_gain: IntensityGains {
            omega: e0y0,
            upsilon: error_gain(upsilon),
            mu: error_gain(mu),
        },
    })
}

/// Ground-truth single-photon yield and error rate of the BB84 model:
/// `Y_1 = Y_0 + eta`, `e_1 = (e_0 Y_0 + e_d eta) / Y_1`.
///
/// This is what an infinite family of decoy intensities would recover.
pub fn bb84_true_single_photon<T: Real>(params: &ChannelParams<T>) -> Result<(T, T)> {
    params.validate()?;
    let eta = params.transmittance();
    let y1 = params.dark_count + eta;
    let e1y1 = params.background_error * params.dark_count + params.misalignment * eta;
    let e1 = if y1 > T::zero() { e1y1 / y1 } else { T::zero() };
    Ok((y1, e1))
}

/// Photon-number-resolved yields `Y_{ij}` and error rates `e_{ij}` for
/// `0 <= i, j <= cutoff`, row index = sender A's photon number.
///
/// Entries beyond the cutoff are treated as absent in every sum over the
/// table; truncation audits majorize them by `Y <= 1`.
///
/// The JSON form is `{"cutoff": n, "Y": [[..]], "e": [[..]]}`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonYieldTable<T> {
    cutoff: usize,
    yields: Vec<Vec<T>>,
    error_rates: Vec<Vec<T>>,
}

#[derive(Serialize, Deserialize)]
struct TableWire<T> {
    cutoff: usize,
    #[serde(rename = "Y")]
    yields: Vec<Vec<T>>,
    #[serde(rename = "e")]
    error_rates: Vec<Vec<T>>,
}

impl<T: Real> PhotonYieldTable<T> {
    /// Build from `(cutoff+1) x (cutoff+1)` row-major matrices of yields and
    /// error rates, all entries in [0, 1].
    pub fn new(yields: Vec<Vec<T>>, error_rates: Vec<Vec<T>>) -> Result<Self> {
        let n = yields.len();
        if n < 2 {
            return Err(Error::InvalidTable("need at least a 2 x 2 table".into()));
        }
        if error_rates.len() != n {
            return Err(Error::InvalidTable(format!(
                "yield matrix has {n} rows but error matrix has {}",
                error_rates.len()
            )));
        }
        for (label, matrix) in [("Y", &yields), ("e", &error_rates)] {
            for (i, row) in matrix.iter().enumerate() {
                if row.len() != n {
                    return Err(Error::InvalidTable(format!(
                        "{label} row {i} has {} entries, expected {n}",
                        row.len()
                    )));
                }
                for (j, &v) in row.iter().enumerate() {
                    if !(v.is_finite() && v >= T::zero() && v <= T::one()) {
                        return Err(Error::InvalidTable(format!(
                            "{label}[{i}][{j}] = {:?} outside [0, 1]",
                            v
                        )));
                    }
                }
            }
        }
        Ok(Self {
            cutoff: n - 1,
            yields,
            error_rates,
        })
    }

    /// Build a table by evaluating `(yield, error rate)` at each `(i, j)`.
    pub fn from_fn(cutoff: usize, mut entry: impl FnMut(usize, usize) -> (T, T)) -> Result<Self> {
        let mut yields = Vec::with_capacity(cutoff + 1);
        let mut error_rates = Vec::with_capacity(cutoff + 1);
        for i in 0..=cutoff {
            let mut yr = Vec::with_capacity(cutoff + 1);
            let mut er = Vec::with_capacity(cutoff + 1);
            for j in 0..=cutoff {
                let (y, e) = entry(i, j);
                yr.push(y);
                er.push(e);
            }
            yields.push(yr);
            error_rates.push(er);
        }
        Self::new(yields, error_rates)
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Yield `Y_{ij}`; panics beyond the cutoff.
    pub fn yield_at(&self, i: usize, j: usize) -> T {
        self.yields[i][j]
    }

    /// Error rate `e_{ij}`; panics beyond the cutoff.
    pub fn error_at(&self, i: usize, j: usize) -> T {
        self.error_rates[i][j]
    }

    /// How entries beyond the cutoff are handled in sums over the table.
    pub fn tail_policy(&self) -> &'static str {
        "entries beyond the cutoff are dropped; truncation bounds majorize their yields by 1"
    }

    /// Poisson probability mass the truncated double sum misses for the
    /// intensity pair `(q_a, q_b)`, which bounds the gain truncation error
    /// since every yield is at most 1.
    pub fn truncation_deficit(&self, q_a: T, q_b: T) -> T {
        let mass = |q: T| {
            poisson_weights(q, self.cutoff)
                .into_iter()
                .fold(T::zero(), |a, w| a + w)
        };
        (T::one() - mass(q_a) * mass(q_b)).max(T::zero())
    }

    pub fn from_json_str(json: &str) -> Result<Self>
    where
        T: serde::de::DeserializeOwned,
    {
        let wire: TableWire<T> = serde_json::from_str(json)?;
        let table = Self::new(wire.yields, wire.error_rates)?;
        if table.cutoff != wire.cutoff {
            return Err(Error::InvalidTable(format!(
                "declared cutoff {} does not match matrix size (cutoff {})",
                wire.cutoff, table.cutoff
            )));
        }
        Ok(table)
    }

    pub fn to_json_string(&self) -> Result<String>
    where
        T: Serialize + Clone,
    {
        let wire = TableWire {
            cutoff: self.cutoff,
            yields: self.yields.clone(),
            error_rates: self.error_rates.clone(),
        };
        Ok(serde_json::to_string(&wire)?)
    }
}

/// Decoy and signal intensities for the two MDI senders.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MdiIntensities<T> {
    pub mu_a: T,
    pub nu_a: T,
    pub mu_b: T,
    pub nu_b: T,
}

impl<T: Real> MdiIntensities<T> {
    /// Same decoy/signal pair on both arms.
    pub fn symmetric(mu: T, nu: T) -> Self {
        Self {
            mu_a: mu,
            nu_a: nu,
            mu_b: mu,
            nu_b: nu,
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_intensity_pair(self.mu_a, self.nu_a)?;
        validate_intensity_pair(self.mu_b, self.nu_b)
    }
}

/// One value per intensity pair; `zero` denotes the vacuum intensity.
///
/// Serialized with the pair-key names `mu_mu`, `mu_nu`, `nu_mu`, `nu_nu`,
/// `mu_0`, `0_mu`, `nu_0`, `0_nu`, `0_0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairStats<T> {
    pub mu_mu: T,
    pub mu_nu: T,
    pub nu_mu: T,
    pub nu_nu: T,
    #[serde(rename = "mu_0")]
    pub mu_zero: T,
    #[serde(rename = "0_mu")]
    pub zero_mu: T,
    #[serde(rename = "nu_0")]
    pub nu_zero: T,
    #[serde(rename = "0_nu")]
    pub zero_nu: T,
    #[serde(rename = "0_0")]
    pub zero_zero: T,
}

impl<T: Copy> PairStats<T> {
    pub fn as_array(&self) -> [T; 9] {
        [
            self.mu_mu,
            self.mu_nu,
            self.nu_mu,
            self.nu_nu,
            self.mu_zero,
            self.zero_mu,
            self.nu_zero,
            self.zero_nu,
            self.zero_zero,
        ]
    }
}

/// MDI observed statistics over the nine intensity pairs.
///
/// The JSON form is
/// `{"intensities": {"mu_a": .., "nu_a": .., "mu_b": .., "nu_b": ..},
///   "Q": {"mu_mu": .., .., "0_0": ..}, "EQ": {..}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MdiObservables<T> {
    pub intensities: MdiIntensities<T>,
    /// Gains `Q_{qa qb}`.
    #[serde(rename = "Q")]
    pub gain: PairStats<T>,
    /// Error gains `E_{qa qb} Q_{qa qb}`.
    #[serde(rename = "EQ")]
    pub error_gain: PairStats<T>,
}

impl<T: Real> MdiObservables<T> {
    pub fn validate(&self) -> Result<()> {
        self.intensities.validate()?;
        for (q, eq) in self
            .gain
            .as_array()
            .into_iter()
            .zip(self.error_gain.as_array())
        {
            if !(q.is_finite() && eq.is_finite() && T::zero() <= eq && eq <= q && q <= T::one()) {
                return Err(Error::InvalidObservables(format!(
                    "need 0 <= EQ <= Q <= 1 for every pair, got Q = {:?}, EQ = {:?}",
                    q, eq
                )));
            }
        }
        Ok(())
    }

    pub fn from_json_str(json: &str) -> Result<Self>
    where
        T: serde::de::DeserializeOwned,
    {
        let obs: Self = serde_json::from_str(json)?;
        obs.validate()?;
        Ok(obs)
    }
}

/// Default MDI yield table: the two-arm product-loss model
/// `Y_{ij} = y_0 + (1 - (1-eta_a)^i)(1 - (1-eta_b)^j)/2` with `y_0 = p_d`,
/// and error gains `e_{ij} Y_{ij} = e_0 y_0 + e_d (Y_{ij} - y_0)`.
///
/// Qualitative only; estimator guarantees hold for any valid table.
pub fn mdi_yield_table_default<T: Real>(
    params_a: &ChannelParams<T>,
    params_b: &ChannelParams<T>,
    cutoff: usize,
) -> Result<PhotonYieldTable<T>> {
    params_a.validate()?;
    params_b.validate()?;
    if cutoff < 8 {
        return Err(Error::CutoffTooSmall { cutoff, minimum: 8 });
    }
    let (eta_a, eta_b) = (params_a.transmittance(), params_b.transmittance());
    let y0 = params_a.dark_count;
    let e0 = params_a.background_error;
    let ed = params_a.misalignment;
    let half = real::<T>(0.5);
    PhotonYieldTable::from_fn(cutoff, |i, j| {
        let reach = |eta: T, n: usize| T::one() - (T::one() - eta).powi(n as i32);
        let y = y0 + half * reach(eta_a, i) * reach(eta_b, j);
        let e = if i == 0 && j == 0 {
            e0
        } else if y > T::zero() {
            (e0 * y0 + ed * (y - y0)) / y
        } else {
            T::zero()
        };
        (y, e)
    })
}

/// Fold a yield table into the nine observed gain/error-gain pairs by the
/// truncated double Poisson sum
/// `Q_{qa qb} = sum_{i,j} e^{-(qa+qb)} qa^i qb^j / (i! j!) Y_{ij}`.
///
/// Errors when the table cutoff leaves more Poisson mass than
/// [`MDI_TAIL_TOLERANCE`] uncovered for the largest intensity pair.
pub fn mdi_observables_from_table<T: Real>(
    table: &PhotonYieldTable<T>,
    intensities: &MdiIntensities<T>,
) -> Result<MdiObservables<T>> {
    intensities.validate()?;
    let tail = table.truncation_deficit(intensities.mu_a, intensities.mu_b);
    let limit = real::<T>(MDI_TAIL_TOLERANCE);
    if tail > limit {
        return Err(Error::InsufficientCutoff {
            cutoff: table.cutoff(),
            tail: tail.to_f64().unwrap_or(f64::NAN),
            limit: MDI_TAIL_TOLERANCE,
        });
    }

    let pair = |q_a: T, q_b: T| -> (T, T) {
        let wa = poisson_weights(q_a, table.cutoff());
        let wb = poisson_weights(q_b, table.cutoff());
        let mut gain = T::zero();
        let mut error_gain = T::zero();
        for (i, &wi) in wa.iter().enumerate() {
            if wi == T::zero() {
                continue;
            }
            let mut row_gain = T::zero();
            let mut row_error = T::zero();
            for (j, &wj) in wb.iter().enumerate() {
                let y = table.yield_at(i, j);
                row_gain = row_gain + wj * y;
                row_error = row_error + wj * table.error_at(i, j) * y;
            }
            gain = gain + wi * row_gain;
            error_gain = error_gain + wi * row_error;
        }
        (gain, error_gain)
    };

    let zero = T::zero();
    let levels_a = [intensities.mu_a, intensities.nu_a, zero];
    let levels_b = [intensities.mu_b, intensities.nu_b, zero];
    let mut q = [[zero; 3]; 3];
    let mut eq = [[zero; 3]; 3];
    for (ia, &qa) in levels_a.iter().enumerate() {
        for (ib, &qb) in levels_b.iter().enumerate() {
            let (g, e) = pair(qa, qb);
            q[ia][ib] = g;
            eq[ia][ib] = e;
        }
    }
    let stats = |m: &[[T; 3]; 3]| PairStats {
        mu_mu: m[0][0],
        mu_nu: m[0][1],
        nu_mu: m[1][0],
        nu_nu: m[1][1],
        mu_zero: m[0][2],
        zero_mu: m[2][0],
        nu_zero: m[1][2],
        zero_nu: m[2][1],
        zero_zero: m[2][2],
    };
    Ok(MdiObservables {
        intensities: *intensities,
        gain: stats(&q),
        error_gain: stats(&eq),
    })
}

/// Ground-truth single-photon-pair statistics: the `(1, 1)` table entry.
pub fn mdi_true_y11_e11<T: Real>(table: &PhotonYieldTable<T>) -> (T, T) {
    (table.yield_at(1, 1), table.error_at(1, 1))
}

/// Poisson weights `e^-q q^i / i!` for `i = 0..=n`; the vacuum intensity
/// gets all mass at `i = 0`.
pub fn poisson_weights<T: Real>(q: T, n: usize) -> Vec<T> {
    let mut w = Vec::with_capacity(n + 1);
    if q == T::zero() {
        w.push(T::one());
        w.resize(n + 1, T::zero());
        return w;
    }
    let mut term = (-q).exp();
    for i in 0..=n {
        w.push(term);
        term = term * q / real::<T>((i + 1) as f64);
    }
    w
}
