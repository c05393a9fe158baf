//! End-to-end tests of the `decoy-sweep` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use decoy_core::PhotonYieldTable64;

fn sweep_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_decoy-sweep"))
}

fn run_ok(args: &[&str]) -> Output {
    let out = sweep_bin().args(args).output().expect("binary runs");
    assert!(
        out.status.success(),
        "expected success, got {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn exit_code(args: &[&str]) -> i32 {
    sweep_bin()
        .args(args)
        .output()
        .expect("binary runs")
        .status
        .code()
        .unwrap_or(-1)
}

#[test]
fn default_bb84_sweep_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bb84.csv");
    run_ok(&["--out", out.to_str().unwrap()]);
    let csv = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 62, "header plus 61 rows");
    assert!(lines[0].starts_with("loss_db,y1_lower,"));
    assert!(dir.path().join("bb84.summary.json").exists());

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("bb84.summary.json")).unwrap())
            .unwrap();
    let global = summary["max_loss_r_global_positive"].as_f64().unwrap();
    let separate = summary["max_loss_r_separate_positive"].as_f64().unwrap();
    assert!(global >= separate);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let config = dir.path().join("config.json");
    fs::write(
        &config,
        r#"{"protocol": "mdi", "loss_end": 12.0, "loss_step": 1.0}"#,
    )
    .unwrap();
    run_ok(&[
        "--config",
        config.to_str().unwrap(),
        "--out",
        a.to_str().unwrap(),
    ]);
    run_ok(&[
        "--config",
        config.to_str().unwrap(),
        "--out",
        b.to_str().unwrap(),
    ]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn flag_overrides_beat_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    let out = dir.path().join("short.csv");
    fs::write(&config, r#"{"loss_end": 10.0, "loss_step": 1.0}"#).unwrap();
    run_ok(&[
        "--config",
        config.to_str().unwrap(),
        "--loss-end",
        "5.0",
        "--out",
        out.to_str().unwrap(),
    ]);
    let csv = fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().count(), 7, "header plus six rows 0..=5 dB");
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never.csv");
    assert_eq!(
        exit_code(&["--loss-step", "0", "--out", out.to_str().unwrap()]),
        2
    );
    assert_eq!(exit_code(&["--loss-start", "20", "--loss-end", "10"]), 2);
    assert_eq!(exit_code(&["--nu", "0.9"]), 2);
    assert!(!out.exists());

    let config = dir.path().join("bad.json");
    fs::write(&config, r#"{"loss_stepp": 1.0}"#).unwrap();
    assert_eq!(exit_code(&["--config", config.to_str().unwrap()]), 2);

    fs::write(&config, "not json").unwrap();
    assert_eq!(exit_code(&["--config", config.to_str().unwrap()]), 2);
}

#[test]
fn io_errors_exit_3() {
    assert_eq!(exit_code(&["--config", "/nonexistent/config.json"]), 3);
    assert_eq!(exit_code(&["--out", "/nonexistent-dir/out.csv"]), 3);
    assert_eq!(
        exit_code(&[
            "--protocol",
            "mdi",
            "--observables",
            "/nonexistent/obs.json"
        ]),
        3
    );
}

fn write_only_y11_table(path: &Path, c: f64, e11: f64) {
    let table = PhotonYieldTable64::from_fn(16, |i, j| {
        if (i, j) == (1, 1) {
            (c, e11)
        } else {
            (0.0, 0.0)
        }
    })
    .unwrap();
    fs::write(path, table.to_json_string().unwrap()).unwrap();
}

#[test]
fn mdi_external_table_rows_degenerate_to_separate() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("table.json");
    let out = dir.path().join("mdi.csv");
    write_only_y11_table(&table, 0.01, 0.02);
    run_ok(&[
        "--protocol",
        "mdi",
        "--observables",
        table.to_str().unwrap(),
        "--loss-end",
        "5",
        "--loss-step",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    let csv = fs::read_to_string(&out).unwrap();
    for line in csv.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let r_sep: f64 = fields[7].parse().unwrap();
        let r_glob: f64 = fields[8].parse().unwrap();
        assert_eq!(r_sep.to_bits(), r_glob.to_bits());
        let flags = fields[16];
        assert!(
            flags.contains("external") && flags.contains("delta_zero"),
            "flags: {flags}"
        );
    }
}

#[test]
fn bb84_external_observables_single_point_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let obs = dir.path().join("obs.json");
    let out = dir.path().join("ext.csv");
    fs::write(
        &obs,
        r#"{"upsilon": 0.1, "mu": 0.5,
            "Q":  {"omega": 3e-6,   "upsilon": 1.0025001666250083e-3, "mu": 4.9905208073176866e-3},
            "EQ": {"omega": 1.5e-6, "upsilon": 1.6492502499375125e-5, "mu": 7.63128121097653e-5}}"#,
    )
    .unwrap();
    run_ok(&[
        "--observables",
        obs.to_str().unwrap(),
        "--loss-end",
        "2",
        "--loss-step",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    let csv = fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    for line in &rows {
        let fields: Vec<&str> = line.split(',').collect();
        // Ground truth is unknown for external data.
        assert!(fields[3].parse::<f64>().unwrap().is_nan());
        assert!(fields[9].parse::<f64>().unwrap().is_nan());
        // Estimates still match the 20 dB model this data came from.
        let y1_lower: f64 = fields[1].parse().unwrap();
        assert!((y1_lower - 9.699186465e-3).abs() < 1e-10);
        assert!(fields[16].contains("external"));
    }
}

#[test]
fn wrong_observables_schema_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("table.json");
    write_only_y11_table(&table, 0.01, 0.02);
    // A yield table fed to the BB84 protocol is rejected.
    assert_eq!(exit_code(&["--observables", table.to_str().unwrap()]), 2);
    // Junk JSON object fed to MDI is rejected.
    let junk = dir.path().join("junk.json");
    fs::write(&junk, r#"{"whatever": 1}"#).unwrap();
    assert_eq!(
        exit_code(&["--protocol", "mdi", "--observables", junk.to_str().unwrap()]),
        2
    );
}
