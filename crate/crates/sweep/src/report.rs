//! CSV and summary emission.
//!
//! Column order is fixed, the header row is mandatory, and every numeric
//! field is written with 17 significant digits so values round-trip
//! exactly; re-running the same configuration byte-reproduces the file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::SweepConfig;
use crate::sweep::SweepRow;
use crate::CliError;

pub const CSV_HEADER: &str = "loss_db,y1_lower,y1_global,y1_true,e1_upper,e1_global,e1_true,\
r_separate,r_global,r_asymptotic,ratio_y1_lower,ratio_y1_global,ratio_e1_upper,ratio_e1_global,\
ratio_r_separate,ratio_r_global,flags";

/// 17-significant-digit scientific notation; locale-independent, exact
/// round-trip through `str::parse::<f64>()`.
pub fn format_float(value: f64) -> String {
    format!("{value:.16e}")
}

fn csv_line(row: &SweepRow) -> String {
    let numbers = [
        row.loss_db,
        row.y1_lower,
        row.y1_global,
        row.y1_true,
        row.e1_upper,
        row.e1_global,
        row.e1_true,
        row.r_separate,
        row.r_global,
        row.r_asymptotic,
        row.ratio_y1_lower,
        row.ratio_y1_global,
        row.ratio_e1_upper,
        row.ratio_e1_global,
        row.ratio_r_separate,
        row.ratio_r_global,
    ];
    let mut fields: Vec<String> = numbers.iter().map(|&v| format_float(v)).collect();
    fields.push(row.flags.join(";"));
    fields.join(",")
}

pub fn render_csv(rows: &[SweepRow]) -> String {
    let mut out = String::with_capacity((rows.len() + 1) * 360);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&csv_line(row));
        out.push('\n');
    }
    out
}

/// Sweep-level summary written next to the CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    /// Largest loss with a positive global-mode rate, if any.
    pub max_loss_r_global_positive: Option<f64>,
    /// Largest loss with a positive separate-mode rate, if any.
    pub max_loss_r_separate_positive: Option<f64>,
    /// Largest observed gap `ratio_r_global - ratio_r_separate`.
    pub max_ratio_gap: Option<f64>,
}

pub fn summarize(rows: &[SweepRow]) -> Summary {
    let max_loss = |positive: &dyn Fn(&SweepRow) -> bool| {
        rows.iter()
            .filter(|r| positive(r))
            .map(|r| r.loss_db)
            .fold(None, |acc: Option<f64>, v| {
                Some(acc.map_or(v, |a| a.max(v)))
            })
    };
    let max_gap = rows
        .iter()
        .map(|r| r.ratio_r_global - r.ratio_r_separate)
        .filter(|g| g.is_finite())
        .fold(None, |acc: Option<f64>, v| {
            Some(acc.map_or(v, |a| a.max(v)))
        });
    Summary {
        max_loss_r_global_positive: max_loss(&|r| r.r_global > 0.0),
        max_loss_r_separate_positive: max_loss(&|r| r.r_separate > 0.0),
        max_ratio_gap: max_gap,
    }
}

/// Path of the summary document: the output path with a `.summary.json`
/// suffix in place of its extension.
pub fn summary_path(out: &Path) -> PathBuf {
    out.with_extension("summary.json")
}

/// Write the CSV and its summary. Refuses an empty sweep; nothing is
/// written in that case.
pub fn write_report(rows: &[SweepRow], config: &SweepConfig) -> Result<Summary, CliError> {
    if rows.is_empty() {
        return Err(CliError::Config(
            "sweep produced no rows; nothing written".into(),
        ));
    }
    let io_err =
        |path: &Path, e: std::io::Error| CliError::Io(format!("writing {}: {e}", path.display()));
    fs::write(&config.out, render_csv(rows)).map_err(|e| io_err(&config.out, e))?;
    let summary = summarize(rows);
    let path = summary_path(&config.out);
    let mut json = serde_json::to_string_pretty(&summary)
        .map_err(|e| CliError::Io(format!("serializing summary: {e}")))?;
    json.push('\n');
    fs::write(&path, json).map_err(|e| io_err(&path, e))?;
    Ok(summary)
}
