//! Per-row sweep computation.

use std::fs;

use decoy_core::bb84::{global_bound_bb84, key_rate_bb84, key_rate_bb84_asymptotic};
use decoy_core::channel::{
    bb84_observables, bb84_true_single_photon, mdi_observables_from_table, mdi_true_y11_e11,
    mdi_yield_table_default,
};
use decoy_core::mdi::{global_bound_mdi, key_rate_mdi, key_rate_mdi_asymptotic, tilde_stats};
use decoy_core::{
    Bb84Observables64, Error, EstimationMode, KeyRate, MdiIntensities, MdiObservables64,
    PhotonYieldTable64,
};

use crate::config::{Protocol, SweepConfig};
use crate::CliError;

/// One line of the output CSV. The `y1`/`e1` columns carry the `Y11`/`e11`
/// quantities when the protocol is MDI. Ratio orientation matches the
/// figures: estimate/true for yields and rates, true/estimate for error
/// rates.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub loss_db: f64,
    pub y1_lower: f64,
    pub y1_global: f64,
    pub y1_true: f64,
    pub e1_upper: f64,
    pub e1_global: f64,
    pub e1_true: f64,
    pub r_separate: f64,
    pub r_global: f64,
    pub r_asymptotic: f64,
    pub ratio_y1_lower: f64,
    pub ratio_y1_global: f64,
    pub ratio_e1_upper: f64,
    pub ratio_e1_global: f64,
    pub ratio_r_separate: f64,
    pub ratio_r_global: f64,
    pub flags: Vec<&'static str>,
}

/// `num/den` where meaningful, NaN where the reference vanishes or is
/// unknown.
fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 && num.is_finite() && den.is_finite() {
        num / den
    } else {
        f64::NAN
    }
}

fn rate_flag(rate: &KeyRate<f64>, token: &'static str, flags: &mut Vec<&'static str>) -> f64 {
    if rate.below_threshold {
        flags.push(token);
    }
    rate.rate
}

#[derive(Clone)]
struct RowCore {
    y1_lower: f64,
    y1_global: f64,
    e1_upper: f64,
    e1_global: f64,
    r_separate: KeyRate<f64>,
    r_global: KeyRate<f64>,
    flags: Vec<&'static str>,
}

fn assemble(
    loss_db: f64,
    core: RowCore,
    y1_true: f64,
    e1_true: f64,
    r_asymptotic: KeyRate<f64>,
) -> SweepRow {
    let mut flags = core.flags;
    let r_separate = rate_flag(&core.r_separate, "r_separate_zero", &mut flags);
    let r_global = rate_flag(&core.r_global, "r_global_zero", &mut flags);
    let r_asym = rate_flag(&r_asymptotic, "r_asymptotic_zero", &mut flags);
    SweepRow {
        loss_db,
        y1_lower: core.y1_lower,
        y1_global: core.y1_global,
        y1_true,
        e1_upper: core.e1_upper,
        e1_global: core.e1_global,
        e1_true,
        r_separate,
        r_global,
        r_asymptotic: r_asym,
        ratio_y1_lower: ratio(core.y1_lower, y1_true),
        ratio_y1_global: ratio(core.y1_global, y1_true),
        ratio_e1_upper: ratio(e1_true, core.e1_upper),
        ratio_e1_global: ratio(e1_true, core.e1_global),
        ratio_r_separate: ratio(r_separate, r_asym),
        ratio_r_global: ratio(r_global, r_asym),
        flags,
    }
}

const ZERO_RATE: KeyRate<f64> = KeyRate {
    rate: 0.0,
    below_threshold: true,
};

/// A correction counts as zero when it is below float residue of the
/// error-mass scale it was subtracted from.
fn effectively_zero(value: f64, scale: f64) -> bool {
    value <= 1e-12 * scale.abs().max(f64::MIN_POSITIVE)
}

/// Estimate one BB84 observation set; a no-key condition becomes a flagged
/// row rather than an abort.
fn bb84_core(
    obs: &Bb84Observables64,
    error_correction: f64,
    external: bool,
) -> Result<RowCore, CliError> {
    let mut flags: Vec<&'static str> = Vec::new();
    if external {
        flags.push("external");
    }
    match global_bound_bb84(obs) {
        Ok(bounds) => {
            if bounds.theta_clamped {
                flags.push("theta_clamped");
            } else if effectively_zero(bounds.theta, bounds.e1_upper * bounds.y1_lower) {
                flags.push("theta_zero");
            }
            if bounds.error_saturated {
                flags.push("e_saturated");
            }
            Ok(RowCore {
                y1_lower: bounds.y1_lower,
                y1_global: bounds.y1_global,
                e1_upper: bounds.e1_upper,
                e1_global: bounds.e1_global,
                r_separate: key_rate_bb84(obs, &bounds, error_correction, EstimationMode::Separate)
                    .map_err(internal)?,
                r_global: key_rate_bb84(obs, &bounds, error_correction, EstimationMode::Global)
                    .map_err(internal)?,
                flags,
            })
        }
        Err(Error::NoKey) => {
            flags.push("no_key");
            Ok(RowCore {
                y1_lower: 0.0,
                y1_global: 0.0,
                e1_upper: f64::NAN,
                e1_global: f64::NAN,
                r_separate: ZERO_RATE,
                r_global: ZERO_RATE,
                flags,
            })
        }
        Err(e) => Err(internal(e)),
    }
}

/// Estimate one MDI observation set.
fn mdi_core(
    obs: &MdiObservables64,
    error_correction: f64,
    external: bool,
) -> Result<RowCore, CliError> {
    let mut flags: Vec<&'static str> = Vec::new();
    if external {
        flags.push("external");
    }
    let stats = tilde_stats(obs);
    if stats.has_negative {
        flags.push("tilde_negative");
    }
    match global_bound_mdi(&stats, &obs.intensities) {
        Ok(bounds) => {
            if bounds.delta_clamped {
                flags.push("delta_clamped");
            } else if effectively_zero(bounds.delta, bounds.e11_upper * bounds.y11_lower) {
                flags.push("delta_zero");
            }
            if bounds.error_saturated {
                flags.push("e_saturated");
            }
            Ok(RowCore {
                y1_lower: bounds.y11_lower,
                y1_global: bounds.y11_global,
                e1_upper: bounds.e11_upper,
                e1_global: bounds.e11_global,
                r_separate: key_rate_mdi(obs, &bounds, error_correction, EstimationMode::Separate)
                    .map_err(internal)?,
                r_global: key_rate_mdi(obs, &bounds, error_correction, EstimationMode::Global)
                    .map_err(internal)?,
                flags,
            })
        }
        Err(Error::NoKey) => {
            flags.push("no_key");
            Ok(RowCore {
                y1_lower: 0.0,
                y1_global: 0.0,
                e1_upper: f64::NAN,
                e1_global: f64::NAN,
                r_separate: ZERO_RATE,
                r_global: ZERO_RATE,
                flags,
            })
        }
        Err(e) => Err(internal(e)),
    }
}

fn internal(e: Error) -> CliError {
    CliError::Config(format!("estimation failed: {e}"))
}

enum DataSource {
    Bb84Model,
    Bb84External(Box<Bb84Observables64>),
    MdiModel,
    MdiTable(Box<PhotonYieldTable64>),
    MdiExternal(Box<MdiObservables64>),
}

fn load_source(config: &SweepConfig) -> Result<DataSource, CliError> {
    let Some(path) = &config.observables else {
        return Ok(match config.protocol {
            Protocol::Bb84 => DataSource::Bb84Model,
            Protocol::Mdi => DataSource::MdiModel,
        });
    };
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("observables {}: {e}", path.display())))?;
    let sniff: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("observables {}: {e}", path.display())))?;
    let bad = |why: String| CliError::Config(format!("observables {}: {why}", path.display()));
    match config.protocol {
        Protocol::Bb84 => {
            if sniff.get("Q").is_none() || sniff.get("upsilon").is_none() {
                return Err(bad(
                    "expected BB84 observables with `upsilon`, `mu`, `Q`, `EQ`".into(),
                ));
            }
            let obs = Bb84Observables64::from_json_str(&text).map_err(|e| bad(e.to_string()))?;
            Ok(DataSource::Bb84External(Box::new(obs)))
        }
        Protocol::Mdi => {
            if sniff.get("cutoff").is_some() {
                let table =
                    PhotonYieldTable64::from_json_str(&text).map_err(|e| bad(e.to_string()))?;
                Ok(DataSource::MdiTable(Box::new(table)))
            } else if sniff.get("intensities").is_some() {
                let obs = MdiObservables64::from_json_str(&text).map_err(|e| bad(e.to_string()))?;
                Ok(DataSource::MdiExternal(Box::new(obs)))
            } else {
                Err(bad("expected a yield table (`cutoff`, `Y`, `e`) or pair observables (`intensities`, `Q`, `EQ`)".into()))
            }
        }
    }
}

/// One row per loss grid point, in loss order, deterministically.
///
/// With external observables the estimation inputs are constant across the
/// grid (rows repeat modulo the loss column); ground-truth columns are NaN
/// unless a yield table supplies them.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRow>, CliError> {
    config.validate()?;
    let source = load_source(config)?;
    let f = config.channel.error_correction;
    let grid = config.loss_grid();
    let mut rows = Vec::with_capacity(grid.len());
    match source {
        DataSource::Bb84Model => {
            for loss in grid {
                let params = config.channel.params_at(loss);
                let obs = bb84_observables(&params, config.nu, config.mu).map_err(internal)?;
                let (y1_true, e1_true) = bb84_true_single_photon(&params).map_err(internal)?;
                let r_asym =
                    key_rate_bb84_asymptotic(&obs, y1_true, e1_true, f).map_err(internal)?;
                let core = bb84_core(&obs, f, false)?;
                rows.push(assemble(loss, core, y1_true, e1_true, r_asym));
            }
        }
        DataSource::Bb84External(obs) => {
            let core = bb84_core(&obs, f, true)?;
            for loss in grid {
                rows.push(assemble(
                    loss,
                    core.clone(),
                    f64::NAN,
                    f64::NAN,
                    KeyRate {
                        rate: f64::NAN,
                        below_threshold: false,
                    },
                ));
            }
        }
        DataSource::MdiModel => {
            for loss in grid {
                let params = config.channel.params_at(loss);
                let table = mdi_yield_table_default(&params, &params, config.table_cutoff)
                    .map_err(internal)?;
                let ints = MdiIntensities {
                    mu_a: config.mu,
                    nu_a: config.nu,
                    mu_b: config.mu_b(),
                    nu_b: config.nu_b(),
                };
                let obs = mdi_observables_from_table(&table, &ints).map_err(internal)?;
                let (y11_true, e11_true) = mdi_true_y11_e11(&table);
                let r_asym =
                    key_rate_mdi_asymptotic(&obs, y11_true, e11_true, f).map_err(internal)?;
                let core = mdi_core(&obs, f, false)?;
                rows.push(assemble(loss, core, y11_true, e11_true, r_asym));
            }
        }
        DataSource::MdiTable(table) => {
            let ints = MdiIntensities {
                mu_a: config.mu,
                nu_a: config.nu,
                mu_b: config.mu_b(),
                nu_b: config.nu_b(),
            };
            let obs = mdi_observables_from_table(&table, &ints)
                .map_err(|e| CliError::Config(format!("observables table: {e}")))?;
            let (y11_true, e11_true) = mdi_true_y11_e11(&table);
            let r_asym = key_rate_mdi_asymptotic(&obs, y11_true, e11_true, f).map_err(internal)?;
            let core = mdi_core(&obs, f, true)?;
            for loss in grid {
                rows.push(assemble(loss, core.clone(), y11_true, e11_true, r_asym));
            }
        }
        DataSource::MdiExternal(obs) => {
            let core = mdi_core(&obs, f, true)?;
            for loss in grid {
                rows.push(assemble(
                    loss,
                    core.clone(),
                    f64::NAN,
                    f64::NAN,
                    KeyRate {
                        rate: f64::NAN,
                        below_threshold: false,
                    },
                ));
            }
        }
    }
    Ok(rows)
}
