//! End-to-end runs of the `nlwr` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlwr"))
        .args(args)
        .output()
        .unwrap()
}

fn tmp(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    if dir.exists() {
        std::fs::remove_dir_all(&dir).unwrap();
    }
    dir
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "command failed:\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

/// (outflow, total travel time, congestion) from a measures.csv.
fn measures(dir: &Path) -> (f64, f64, f64) {
    let text = std::fs::read_to_string(dir.join("measures.csv")).unwrap();
    let value = |name: &str| -> f64 {
        text.lines()
            .find_map(|l| l.strip_prefix(&format!("{name},")))
            .unwrap_or_else(|| panic!("no {name} row in {text}"))
            .parse()
            .unwrap()
    };
    (value("outflow"), value("total_travel_time"), value("congestion"))
}

fn close(actual: f64, expected: f64, rel: f64) -> bool {
    (actual - expected).abs() <= rel * expected.abs()
}

#[test]
fn distribution_benchmark_measures() {
    let dir = tmp("dist");
    let out = run(&[
        "simulate", "--builtin", "diamond", "--model", "nonlocal-distribution",
        "--eta", "0.5", "--T", "20", "--out", dir.to_str().unwrap(),
    ]);
    assert_success(&out);
    let (o, ttt, cm) = measures(&dir);
    assert!(close(o, 2.1531, 0.02), "outflow {o}");
    assert!(close(ttt, 59.696, 0.02), "travel time {ttt}");
    assert!(close(cm, 48.744, 0.02), "congestion {cm}");
    assert!(dir.join("final.csv").exists());
    assert!(dir.join("ratios.csv").exists());
}

#[test]
fn local_benchmark_measures() {
    let dir = tmp("local");
    let out = run(&[
        "simulate", "--builtin", "diamond", "--model", "local-maxflux",
        "--T", "20", "--out", dir.to_str().unwrap(),
    ]);
    assert_success(&out);
    let (o, ttt, cm) = measures(&dir);
    assert!(close(o, 3.7862, 0.02), "outflow {o}");
    assert!(close(ttt, 47.268, 0.02), "travel time {ttt}");
    assert!(close(cm, 26.09, 0.02), "congestion {cm}");
}

#[test]
fn zero_horizon_writes_the_initial_state() {
    let dir = tmp("frozen");
    let out = run(&[
        "simulate", "--builtin", "diamond", "--T", "0", "--out", dir.to_str().unwrap(),
    ]);
    assert_success(&out);
    let (o, ttt, cm) = measures(&dir);
    assert_eq!((o, ttt, cm), (0.0, 0.0, 0.0));
    let profile = std::fs::read_to_string(dir.join("final.csv")).unwrap();
    // road 4 starts at density 0.8 and nothing has moved
    assert!(profile.lines().any(|l| l.starts_with("4,") && l.ends_with(",0.8")));
    assert!(!profile.contains("snapshot"));
}

#[test]
fn riemann_two_state_profile() {
    let out = run(&["riemann", "--rho-l", "1", "--rho-r", "0.5", "--t", "1"]);
    assert_success(&out);
    for (x, rho) in profile_rows(&out) {
        let expected = if x < 1.0 { 1.0 } else { 0.5 };
        assert_eq!(rho, expected, "at x = {x}");
    }
}

#[test]
fn riemann_plateau_profile() {
    let out = run(&[
        "riemann", "--rho-l", "1", "--rho-r", "0.5", "--rho-max2", "0.75", "--t", "1",
    ]);
    assert_success(&out);
    for (x, rho) in profile_rows(&out) {
        let expected = if x < 0.0 {
            1.0
        } else if x < 1.0 {
            0.75
        } else {
            0.5
        };
        assert_eq!(rho, expected, "at x = {x}");
    }
}

#[test]
fn riemann_equal_states_stay_constant() {
    let out = run(&["riemann", "--rho-l", "0.7", "--rho-r", "0.7", "--t", "2.5"]);
    assert_success(&out);
    let rows = profile_rows(&out);
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|&(_, rho)| rho == 0.7));
}

fn profile_rows(out: &Output) -> Vec<(f64, f64)> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .skip(1)
        .map(|l| {
            let (x, rho) = l.split_once(',').unwrap();
            (x.parse().unwrap(), rho.parse().unwrap())
        })
        .collect()
}

#[test]
fn sweep_with_no_etas_is_header_only() {
    let dir = tmp("sweep-empty");
    let out = run(&[
        "sweep-eta", "--builtin", "diamond", "--out", dir.to_str().unwrap(), "--etas",
    ]);
    assert_success(&out);
    let text = std::fs::read_to_string(dir.join("sweep.csv")).unwrap();
    assert_eq!(text, "eta,outflow,total_travel_time,congestion\n");
}

#[test]
fn sweep_runs_each_eta_plus_the_local_baseline() {
    let dir = tmp("sweep");
    let out = run(&[
        "sweep-eta", "--builtin", "diamond", "--etas", "0.5", "--out", dir.to_str().unwrap(),
    ]);
    assert_success(&out);
    let text = std::fs::read_to_string(dir.join("sweep.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("eta,outflow,total_travel_time,congestion"));
    let row = |line: &str| -> Vec<String> { line.split(',').map(str::to_string).collect() };
    let nonlocal = row(lines.next().unwrap());
    let local = row(lines.next().unwrap());
    assert_eq!(lines.next(), None);
    assert_eq!(nonlocal[0], "0.5");
    assert!(close(nonlocal[1].parse().unwrap(), 4.6774, 0.02));
    assert_eq!(local[0], "local");
    assert!(close(local[1].parse().unwrap(), 3.7862, 0.02));
    assert!(close(local[2].parse().unwrap(), 47.268, 0.02));
}

#[test]
fn compare_emits_one_distance_per_road() {
    let dir = tmp("cmp");
    let out = run(&[
        "compare", "--builtin", "diamond", "--models", "nonlocal-maxflux,nonlocal-distribution",
        "--T", "2", "--out", dir.to_str().unwrap(),
    ]);
    assert_success(&out);
    let text = std::fs::read_to_string(dir.join("compare.csv")).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 9);
    let distances: Vec<f64> = rows
        .iter()
        .map(|l| l.split_once(',').unwrap().1.parse().unwrap())
        .collect();
    assert!(distances.iter().all(|&d| d >= 0.0));
    // the split at the first fork differs between the models
    assert!(distances.iter().any(|&d| d > 1e-3));
}

#[test]
fn validate_accepts_the_builtin() {
    let out = run(&["validate", "--builtin", "diamond"]);
    assert_success(&out);
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok:"));
}

#[test]
fn validate_rejects_a_mismatched_grid() {
    let out = run(&["validate", "--builtin", "diamond", "--dx", "0.03"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("whole number of cells"), "stderr: {err}");
}

#[test]
fn parse_error_names_the_missing_field() {
    let dir = tmp("badfile");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("scenario.json");
    std::fs::write(
        &path,
        r#"{"roads": [{"id": 1, "length": 1.0, "v_max": 1.0}]}"#,
    )
    .unwrap();
    let out = run(&["validate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("rho_max"));
}

#[test]
fn unknown_model_is_a_usage_error() {
    let out = run(&["simulate", "--builtin", "diamond", "--model", "nonlocal"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let dir = tmp("blocked");
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(dir.join("file"), "x").unwrap();
    let under_file = dir.join("file").join("sub");
    let out = run(&[
        "simulate", "--builtin", "diamond", "--T", "0", "--out", under_file.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn identical_invocations_write_identical_files() {
    let (a, b) = (tmp("det-a"), tmp("det-b"));
    for dir in [&a, &b] {
        let out = run(&[
            "simulate", "--builtin", "diamond", "--T", "1", "--out", dir.to_str().unwrap(),
        ]);
        assert_success(&out);
    }
    for file in ["final.csv", "measures.csv", "ratios.csv"] {
        let bytes_a = std::fs::read(a.join(file)).unwrap();
        let bytes_b = std::fs::read(b.join(file)).unwrap();
        assert_eq!(bytes_a, bytes_b, "{file} differs");
    }
}
