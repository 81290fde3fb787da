use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use nhrmt::cli::parse_config;
use nhrmt::stats::sigma2_ginibre_analytic;

fn nhrmt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nhrmt")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = nhrmt(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn analytic_curve_dump() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    ok(&["analytic", "--sigma2-gine", "--n-max", "20", "--out", out]);
    let csv = read(dir.path(), "analytic.csv");
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "n_mean,sigma2_gine");
    assert_eq!(lines.len(), 81);
    let row: Vec<f64> = lines[4].split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(row[0], 1.0);
    assert_eq!(row[1], sigma2_ginibre_analytic(1.0).unwrap());
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn ensemble_run_is_reproducible_and_round_trips() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = |d: &Path| {
        vec![
            "ensemble".to_string(),
            "--class".into(),
            "gine".into(),
            "--n".into(),
            "120".into(),
            "--members".into(),
            "4".into(),
            "--seed".into(),
            "7".into(),
            "--n-max".into(),
            "4".into(),
            "--centers".into(),
            "50".into(),
            "--out".into(),
            d.to_str().unwrap().to_string(),
        ]
    };
    let run = |d: &Path| {
        let v = args(d);
        ok(&v.iter().map(String::as_str).collect::<Vec<_>>());
    };
    run(a.path());
    run(b.path());
    for name in [
        "spectra/0000.csv",
        "spectra/0003.csv",
        "nnsd.csv",
        "ratio_type1.csv",
        "ratio_type2.csv",
        "variance.csv",
        "density.csv",
    ] {
        assert_eq!(read(a.path(), name), read(b.path(), name), "{name} differs between runs");
    }
    assert!(read(a.path(), "spectra/0000.csv").starts_with("re,im\n"));
    assert!(read(a.path(), "variance.csv").starts_with("n_mean,sigma2,stderr"));

    let manifest = a.path().join("manifest.json");
    let original = parse_config(std::iter::once("nhrmt".to_string()).chain(args(a.path()))).unwrap();
    let back = parse_config(["nhrmt", "ensemble", "--config", manifest.to_str().unwrap()]).unwrap();
    assert_eq!(back, original);
    let m: serde_json::Value = serde_json::from_str(&read(a.path(), "manifest.json")).unwrap();
    assert_eq!(m["config"]["ensemble"]["n"], 120);
    assert!(m["outputs"].as_array().unwrap().iter().any(|p| p == "variance.csv"));
}

#[test]
fn stats_command_reads_saved_spectra() {
    let gen = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    ok(&["ensemble", "--n", "150", "--members", "3", "--n-max", "2", "--out", gen.path().to_str().unwrap()]);
    let input = gen.path().join("spectra");
    ok(&[
        "stats",
        "--input",
        input.to_str().unwrap(),
        "--density",
        "uniform",
        "--window",
        "0.0,0.8",
        "--n-max",
        "2",
        "--format",
        "json",
        "--out",
        out.path().to_str().unwrap(),
    ]);
    let v: serde_json::Value = serde_json::from_str(&read(out.path(), "variance.json")).unwrap();
    assert_eq!(v["n_mean"].as_array().unwrap().len(), 2);
    let h: serde_json::Value = serde_json::from_str(&read(out.path(), "nnsd.json")).unwrap();
    assert_eq!(h["pdf"].as_array().unwrap().len(), 60);
}

#[test]
fn small_top_and_log_gas_pipelines() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("top");
    ok(&[
        "kickedtop",
        "--class",
        "ue",
        "--j",
        "30",
        "--points",
        "3,2",
        "--n-max",
        "2",
        "--centers",
        "20",
        "--fit-degree",
        "6",
        "--out",
        out.to_str().unwrap(),
    ]);
    let m: serde_json::Value = serde_json::from_str(&read(&out, "manifest.json")).unwrap();
    assert_eq!(m["resolved"]["parity_sectors"], true);
    assert!(out.join("spectra/0011.csv").exists());

    let out = dir.path().join("gas");
    ok(&[
        "loggas",
        "--n",
        "60",
        "--chains",
        "2",
        "--sweeps",
        "100",
        "--burn-in",
        "100",
        "--n-min",
        "2",
        "--n-max",
        "3",
        "--centers",
        "20",
        "--no-spectra",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(read(&out, "variance.csv").starts_with("n_mean,sigma2,stderr"));
    assert!(!out.join("spectra").exists());
}

#[test]
fn exit_codes() {
    let out = nhrmt(&["kickedtop", "--class", "se", "--j", "1000"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("half-integer"));
    assert_eq!(nhrmt(&["ensemble", "--bogus"]).status.code(), Some(2));
    assert_eq!(nhrmt(&["--help"]).status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.ini");
    fs::write(&cfg, "[ensemble]\nmatrix = 3\n").unwrap();
    let out = nhrmt(&["ensemble", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown key"));

    // spacing ratios need at least three eigenvalues
    let out = nhrmt(&["ensemble", "--n", "2", "--members", "1", "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}
