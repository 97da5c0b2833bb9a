use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn fermichip(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fermichip"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn thermo_point_matches_scan_row() {
    let point = json(&fermichip(&[
        "thermo",
        "--t-over-tf",
        "0.25",
        "--N",
        "1e6",
        "--fbar-hz",
        "300",
    ]));
    let out = fermichip(&["thermo", "--scan", "--from", "0.25", "--to", "0.5", "--points", "2"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let row: Vec<f64> = text
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|c| c.parse().unwrap())
        .collect();
    assert_eq!(row[0], 0.25);
    assert_eq!(row[2], point["fugacity"].as_f64().unwrap());
    assert_eq!(row[5], point["e_per_n_over_ef"].as_f64().unwrap());
}

#[test]
fn tof_is_deterministic_and_fits_back() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.bin");
    let b = dir.path().join("b.bin");
    let gen = |out: &Path| {
        fermichip(&[
            "tof",
            "--t-over-tf",
            "0.2",
            "--N",
            "2e5",
            "--noise",
            "0.01",
            "--seed",
            "11",
            "--pixels",
            "48",
            "--out",
            path(out),
        ])
    };
    let (ra, rb) = (gen(&a), gen(&b));
    let summary = json(&ra);
    assert_eq!(summary["raster"], path(&a));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(fs::read(&a).unwrap().len(), 32 + 8 * 48 * 48);
    assert!(rb.status.success());

    let noise = summary["noise_rms_per_m2"].as_f64().unwrap().to_string();
    let fit = json(&fermichip(&["fit", "--image", path(&a), "--noise-rms", &noise]));
    let fits = fit["fits"].as_array().unwrap();
    assert_eq!(fits[0]["model"], "gaussian");
    assert_eq!(fits[1]["model"], "fermi-dirac");
    let n = fits[1]["n"].as_f64().unwrap();
    assert!((n / 2e5 - 1.0).abs() < 0.02, "N = {n}");
    let t = fits[1]["t_over_tf"].as_f64().unwrap();
    assert!((t - 0.2).abs() < 0.03, "T/T_F = {t}");
    assert!(fit["chi2_ratio_gauss_over_fd"].as_f64().unwrap() > 1.0);
}

#[test]
fn dress_output_is_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let one = dir.path().join("one");
    let four = dir.path().join("four");
    let r1 = fermichip(&["--jobs", "1", "dress", "--out-dir", path(&one)]);
    let r4 = fermichip(&["dress", "--jobs", "4", "--out-dir", path(&four)]);
    assert_eq!(r1.stdout, r4.stdout);
    for f in ["dress_report.json", "dress_Rb87.csv", "dress_K40.csv"] {
        assert_eq!(fs::read(one.join(f)).unwrap(), fs::read(four.join(f)).unwrap(), "{f}");
    }
    let report = json(&r1);
    assert_eq!(report["species"][0]["topology"], "double");
    assert_eq!(report["species"][1]["topology"], "single");
}

#[test]
fn trap_preset_reproduces_calibration() {
    let report = json(&fermichip(&["trap", "--no-depth"]));
    let hz: Vec<f64> = report["frequencies_hz"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert!((hz[0] - 46.0).abs() < 0.05);
    assert!(((hz[1] * hz[2]).sqrt() - 823.0).abs() < 0.5);
    assert!((report["height_m"].as_f64().unwrap() - 190e-6).abs() < 1e-9);
}

#[test]
fn config_file_matches_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"command": "evap", "options": {"preset": "reichel-z"}}"#).unwrap();
    let from_file = fermichip(&["--config", path(&cfg)]);
    let from_flags = fermichip(&["evap", "--preset", "reichel-z"]);
    assert!(from_file.status.success());
    assert_eq!(from_file.stdout, from_flags.stdout);
}

#[test]
fn exit_codes() {
    assert_eq!(
        fermichip(&["thermo", "--species", "Xe131", "--t-over-tf", "0.2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(fermichip(&["thermo", "--t-over-tf", "-0.5"]).status.code(), Some(2));
    assert_eq!(fermichip(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        fermichip(&["fit", "--image", "/nonexistent.bin"]).status.code(),
        Some(2)
    );
    assert_eq!(fermichip(&["trap", "--seed-um", "0,0,-0.5"]).status.code(), Some(3));
    assert_eq!(fermichip(&["paper-check", "--only", "2b"]).status.code(), Some(0));
    assert_eq!(fermichip(&["paper-check", "--only", "99"]).status.code(), Some(2));
    assert_eq!(fermichip(&["--help"]).status.code(), Some(0));
}
