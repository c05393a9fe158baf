//! Sweep configuration: JSON file, command-line overrides, validation.

use std::path::PathBuf;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use decoy_core::ChannelParams;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Bb84,
    Mdi,
}

/// Channel model constants shared by every grid point; the loss column is
/// what the sweep varies.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    pub dark_count: f64,
    pub misalignment: f64,
    pub background_error: f64,
    pub error_correction: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        let p = ChannelParams::<f64>::default();
        Self {
            dark_count: p.dark_count,
            misalignment: p.misalignment,
            background_error: p.background_error,
            error_correction: p.error_correction,
        }
    }
}

impl ChannelConfig {
    pub fn params_at(&self, loss_db: f64) -> ChannelParams<f64> {
        ChannelParams {
            loss_db,
            dark_count: self.dark_count,
            misalignment: self.misalignment,
            background_error: self.background_error,
            error_correction: self.error_correction,
        }
    }
}

/// Full sweep configuration. Every field has a default, the JSON config
/// overrides defaults, and command-line flags override the file.
///
/// For MDI the loss value applies to each arm, and `mu_b`/`nu_b` default to
/// the A-side intensities.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub protocol: Protocol,
    pub loss_start: f64,
    pub loss_end: f64,
    pub loss_step: f64,
    pub mu: f64,
    pub nu: f64,
    pub mu_b: Option<f64>,
    pub nu_b: Option<f64>,
    pub channel: ChannelConfig,
    /// Photon-number cutoff of the bundled MDI yield table.
    pub table_cutoff: usize,
    pub out: PathBuf,
    /// Externally measured observables JSON; skips the channel simulation.
    pub observables: Option<PathBuf>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            protocol: Protocol::Bb84,
            loss_start: 0.0,
            loss_end: 30.0,
            loss_step: 0.5,
            mu: 0.5,
            nu: 0.1,
            mu_b: None,
            nu_b: None,
            channel: ChannelConfig::default(),
            table_cutoff: 20,
            out: PathBuf::from("sweep.csv"),
            observables: None,
        }
    }
}

impl SweepConfig {
    pub fn from_json_str(json: &str) -> Result<Self, CliError> {
        serde_json::from_str(json)
            .map_err(|e| CliError::Config(format!("config: {e} (field names and location above)")))
    }

    pub fn mu_b(&self) -> f64 {
        self.mu_b.unwrap_or(self.mu)
    }

    pub fn nu_b(&self) -> f64 {
        self.nu_b.unwrap_or(self.nu)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |field: &str, why: String| {
            Err(CliError::Config(format!("config field `{field}`: {why}")))
        };
        if !(self.loss_step > 0.0 && self.loss_step.is_finite()) {
            return fail(
                "loss_step",
                format!("must be positive, got {}", self.loss_step),
            );
        }
        if !(self.loss_start >= 0.0 && self.loss_start.is_finite()) {
            return fail(
                "loss_start",
                format!("must be nonnegative, got {}", self.loss_start),
            );
        }
        if !(self.loss_end >= self.loss_start && self.loss_end.is_finite()) {
            return fail(
                "loss_end",
                format!(
                    "must be at least loss_start, got {} < {}",
                    self.loss_end, self.loss_start
                ),
            );
        }
        for (field, nu, mu) in [
            ("nu/mu", self.nu, self.mu),
            ("nu_b/mu_b", self.nu_b(), self.mu_b()),
        ] {
            if !(nu > 0.0 && nu < mu && mu.is_finite()) {
                return fail(field, format!("need 0 < decoy < signal, got {nu} and {mu}"));
            }
        }
        if self.table_cutoff < 8 {
            return fail(
                "table_cutoff",
                format!("must be at least 8, got {}", self.table_cutoff),
            );
        }
        self.channel
            .params_at(self.loss_start)
            .validate()
            .map_err(|e| CliError::Config(format!("config field `channel`: {e}")))?;
        if self.out.as_os_str().is_empty() {
            return fail("out", "must not be empty".into());
        }
        Ok(())
    }

    /// Loss grid points: `loss_start + k * loss_step` up to `loss_end`
    /// (half-step slack absorbs float drift at the top end).
    pub fn loss_grid(&self) -> Vec<f64> {
        let count =
            ((self.loss_end - self.loss_start) / self.loss_step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|k| self.loss_start + k as f64 * self.loss_step)
            .collect()
    }
}
