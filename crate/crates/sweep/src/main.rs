use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use decoy_sweep::config::{Protocol, SweepConfig};
use decoy_sweep::report::{summary_path, write_report};
use decoy_sweep::sweep::run_sweep;
use decoy_sweep::CliError;

/// Sweep channel loss and compute decoy-state QKD key-rate bounds with
/// separate and global privacy-amplification estimation.
#[derive(Debug, Parser)]
#[command(name = "decoy-sweep", version)]
struct Cli {
    /// JSON configuration file; command-line flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Protocol to sweep.
    #[arg(long, value_enum)]
    protocol: Option<Protocol>,

    /// First loss grid point in dB (per arm for MDI).
    #[arg(long)]
    loss_start: Option<f64>,

    /// Last loss grid point in dB.
    #[arg(long)]
    loss_end: Option<f64>,

    /// Loss grid spacing in dB.
    #[arg(long)]
    loss_step: Option<f64>,

    /// Signal intensity (sender A for MDI).
    #[arg(long)]
    mu: Option<f64>,

    /// Decoy intensity (sender A for MDI).
    #[arg(long)]
    nu: Option<f64>,

    /// Sender B signal intensity (MDI only; defaults to --mu).
    #[arg(long)]
    mu_b: Option<f64>,

    /// Sender B decoy intensity (MDI only; defaults to --nu).
    #[arg(long)]
    nu_b: Option<f64>,

    /// Output CSV path; the summary lands next to it as *.summary.json.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Externally measured observables JSON (skips the channel simulation).
    #[arg(long)]
    observables: Option<PathBuf>,
}

fn build_config(cli: Cli) -> Result<SweepConfig, CliError> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("config {}: {e}", path.display())))?;
            SweepConfig::from_json_str(&text)?
        }
        None => SweepConfig::default(),
    };
    if let Some(protocol) = cli.protocol {
        config.protocol = protocol;
    }
    if let Some(v) = cli.loss_start {
        config.loss_start = v;
    }
    if let Some(v) = cli.loss_end {
        config.loss_end = v;
    }
    if let Some(v) = cli.loss_step {
        config.loss_step = v;
    }
    if let Some(v) = cli.mu {
        config.mu = v;
    }
    if let Some(v) = cli.nu {
        config.nu = v;
    }
    if cli.mu_b.is_some() {
        config.mu_b = cli.mu_b;
    }
    if cli.nu_b.is_some() {
        config.nu_b = cli.nu_b;
    }
    if let Some(out) = cli.out {
        config.out = out;
    }
    if cli.observables.is_some() {
        config.observables = cli.observables;
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = build_config(cli)?;
    let rows = run_sweep(&config)?;
    let summary = write_report(&rows, &config)?;
    println!(
        "wrote {} rows to {} (summary: {})",
        rows.len(),
        config.out.display(),
        summary_path(&config.out).display()
    );
    if let Some(loss) = summary.max_loss_r_global_positive {
        println!("max tolerable loss, global mode: {loss} dB");
    }
    if let Some(loss) = summary.max_loss_r_separate_positive {
        println!("max tolerable loss, separate mode: {loss} dB");
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
