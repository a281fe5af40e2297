// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cpfilter"));
    cmd.env_remove("CPFILTER_WORKERS");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Two mean shifts at 60 and 120 in a series of 180, written via `simulate`.
fn simulated_series(dir: &Path) -> PathBuf {
    let data = dir.join("series.csv");
    let out = run(&[
        "simulate",
        "--kind",
        "piecewise-gaussian",
        "--means",
        "0,4,0",
        "--sds",
        "1,1,1",
        "--lengths",
        "60,60,60",
        "--seed",
        "7",
        "--output",
        data.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    data
}

fn gaussian_config(dir: &Path, data: &Path, spacing: usize) -> PathBuf {
    write(
        dir,
        "gauss.cfg",
        &format!(
            "# piecewise gaussian\ndata.path = {}\nmodel.kind = gaussian_conjugate\ngrid.spacing = {spacing}\nprior.k.max = 6\nsampling.count = 20\nseed = 3\n",
            data.display()
        ),
    )
}

fn strip_timings(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("timings");
    v
}

#[test]
fn simulate_writes_series_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulated_series(dir.path());
    let values = std::fs::read_to_string(&data).unwrap();
    assert_eq!(values.lines().count(), 180);
    let meta = read_json(&dir.path().join("series.csv.meta.json"));
    assert_eq!(meta["seed"], 7);
    assert_eq!(meta["n"], 180);
    assert_eq!(meta["changepoints"], serde_json::json!([60, 120]));
    assert!(meta["rng"].as_str().unwrap().contains("chacha8"));
}

#[test]
fn detect_finds_shifts_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulated_series(dir.path());
    let cfg = gaussian_config(dir.path(), &data, 4);
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let o = run(&["detect", "--config", cfg.to_str().unwrap(), "--output", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (ra, rb) = (read_json(&a), read_json(&b));
    assert_eq!(ra["map_k"], 2);
    assert_eq!(ra["map_positions_refined"], serde_json::json!([60, 120]));
    assert_eq!(ra["samples"].as_array().unwrap().len(), 20);
    let posterior: f64 = ra["posterior_k"].as_array().unwrap().iter().map(|p| p.as_f64().unwrap()).sum();
    assert!((posterior - 1.0).abs() < 1e-12);
    assert!(ra["timings"]["phases"]["table_fill"].is_number());
    assert_eq!(strip_timings(ra), strip_timings(rb));
}

#[test]
fn worker_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulated_series(dir.path());
    let cfg = gaussian_config(dir.path(), &data, 2);
    let mut reports = Vec::new();
    for workers in ["1", "3"] {
        let out = dir.path().join(format!("w{workers}.json"));
        let o = bin()
            .args(["detect", "--config", cfg.to_str().unwrap(), "--output", out.to_str().unwrap()])
            .env("CPFILTER_WORKERS", workers)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let mut r = strip_timings(read_json(&out));
        r["config"].as_object_mut().unwrap().remove("workers");
        reports.push(r);
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn overrides_and_stdout_output() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulated_series(dir.path());
    let cfg = gaussian_config(dir.path(), &data, 4);
    let o = run(&["detect", "--config", cfg.to_str().unwrap(), "--set", "refine.enabled=false"]);
    assert!(o.status.success());
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["refinement_sweeps"], 0);
    assert_eq!(r["map_positions_refined"], r["map_positions"]);
    assert_eq!(r["config"]["refine.enabled"], "false");
}

#[test]
fn blank_line_is_a_data_error_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "bad.csv", "1.0\n2.0\n\n3.0\n");
    let cfg = gaussian_config(dir.path(), &data, 1);
    let out = dir.path().join("err.json");
    let o = run(&["detect", "--config", cfg.to_str().unwrap(), "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let err = read_json(&out);
    assert_eq!(err["status"], "error");
    assert_eq!(err["exit_code"], 3);
    assert!(err["message"].as_str().unwrap().contains("line 3"), "{err}");
}

#[test]
fn config_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulated_series(dir.path());
    let cfg = gaussian_config(dir.path(), &data, 1);
    let o = run(&["detect", "--config", cfg.to_str().unwrap(), "--set", "grid.spacingg=3"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["detect", "--config", cfg.to_str().unwrap(), "--set", "grid.spacing=0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["detect", "--config", dir.path().join("missing.cfg").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn ingest_check_reports_length() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulated_series(dir.path());
    let cfg = gaussian_config(dir.path(), &data, 1);
    let o = run(&["ingest-check", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["n"], 180);
}

#[test]
fn refine_reproduces_detect() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulated_series(dir.path());
    let cfg = gaussian_config(dir.path(), &data, 5);
    let first = dir.path().join("first.json");
    let o = run(&["detect", "--config", cfg.to_str().unwrap(), "--output", first.to_str().unwrap()]);
    assert!(o.status.success());
    let second = dir.path().join("second.json");
    let o = run(&[
        "refine",
        "--config",
        cfg.to_str().unwrap(),
        "--result",
        first.to_str().unwrap(),
        "--output",
        second.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read_json(&first)["map_positions_refined"], read_json(&second)["map_positions_refined"]);
}

#[test]
fn bayes_factor_is_ratio_of_marginals() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulated_series(dir.path());
    let cfg_a = gaussian_config(dir.path(), &data, 5);
    let cfg_b = write(
        dir.path(),
        "b.cfg",
        &format!(
            "data.path = {}\nmodel.kind = gaussian_conjugate\nmodel.nig.kappa = 1\ngrid.spacing = 5\nprior.k.max = 6\n",
            data.display()
        ),
    );
    let o = run(&["bayes-factor", "--config-a", cfg_a.to_str().unwrap(), "--config-b", cfg_b.to_str().unwrap(), "--k", "1,2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    for e in r["entries"].as_array().unwrap() {
        let (a, b) = (e["log_marginal_a"].as_f64().unwrap(), e["log_marginal_b"].as_f64().unwrap());
        assert!((e["log_bayes_factor"].as_f64().unwrap() - (a - b)).abs() < 1e-12);
    }
    let o = run(&[
        "bayes-factor",
        "--config-a",
        cfg_a.to_str().unwrap(),
        "--config-b",
        cfg_b.to_str().unwrap(),
        "--k",
        "1",
        "--set",
        "grid.spacing=5",
        "--set",
        "prior.k.max=2",
    ]);
    assert!(o.status.success());
    let o = run(&["bayes-factor", "--config-a", cfg_a.to_str().unwrap(), "--config-b", cfg_b.to_str().unwrap(), "--k", "9"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn gmrf_run_reports_segment_fields() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("counts.csv");
    let o = run(&["simulate", "--kind", "poisson-ar1", "--n", "60", "--seed", "4", "--output", data.to_str().unwrap()]);
    assert!(o.status.success());
    let cfg = write(
        dir.path(),
        "gmrf.cfg",
        &format!(
            "data.path = {}\nmodel.kind = gmrf\nmodel.obs.kind = poisson\nmodel.hyper.nodes = 3\ngrid.spacing = 10\nprior.k.max = 2\noutput.latent_field = true\n",
            data.display()
        ),
    );
    let out = dir.path().join("gmrf.json");
    let o = run(&["detect", "--config", cfg.to_str().unwrap(), "--output", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&out);
    let segments = r["segments"].as_array().unwrap();
    assert_eq!(segments.len(), r["map_k"].as_u64().unwrap() as usize + 1);
    let total: usize = segments.iter().map(|s| s["linear_predictor"].as_array().unwrap().len()).sum();
    assert_eq!(total, 60);
    assert_eq!(r["diagnostics"]["failed_gmrf_segments"], 0);
}
