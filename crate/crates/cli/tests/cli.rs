use std::path::Path;
use std::process::Command;

use elm_cli::config::{EtaSpec, MethodSpec, ProblemSpec};
use elm_cli::runner::read_metrics;
use elm_cli::{cmd_compare, cmd_run, cmd_sweep, CliError, RunConfig};
use elm_core::diagnostics::penalty_value;

const AFFINE: &str = r#"
[problem]
kind = "affine_l1"
n = 6
p = 2
seed = 3

[solver]
rho = 1.0
beta = 5.0
theta = 0.5
max_iters = 400
record_every = 50

[solver.method]
kind = "prox_sgdm"
tau = 1.0
alpha = 0.05

[solver.eta]
kind = "power"
scale = 0.5
exponent = 0.5

[solver.noise]
kind = "uniform_box"
bound = 0.1

[run]
repetitions = 3
seed = 11
"#;

// The penalty term overflows on the first step.
const DIVERGING: &str = r#"
[problem]
kind = "exactness_1d"
slope = 1.0

[solver]
rho = 1.7e308
beta = 5.0
theta = 0.5
max_iters = 100

[solver.method]
kind = "prox_adam"
tau1 = 1.0
tau2 = 0.1
alpha = 0.1
eps = 1e-8

[solver.eta]
kind = "power"
scale = 0.5
exponent = 0.5
"#;

fn affine() -> RunConfig {
    RunConfig::from_toml_str(AFFINE).unwrap()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

fn elm(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_elm")).args(args).output().unwrap()
}

#[test]
fn run_writes_one_metrics_file_per_repetition_and_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    let results = cmd_run(&affine(), dir.path(), true).unwrap();
    assert_eq!(results.len(), 3);
    for rep in 0..3 {
        let records = read_metrics(&dir.path().join(format!("metrics_rep{rep}.jsonl"))).unwrap();
        assert_eq!(records.first().unwrap().k, 0);
        assert_eq!(records.last().unwrap().k, 400);
    }
    let summary = read(&dir.path().join("summary.csv"));
    let mut lines = summary.lines();
    assert!(lines.next().unwrap().starts_with("rep,seed,status"));
    assert_eq!(lines.count(), 3);
    assert!(dir.path().join("timing.csv").exists());
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    cmd_run(&affine(), a.path(), true).unwrap();
    cmd_run(&affine(), b.path(), true).unwrap();
    for name in [
        "metrics_rep0.jsonl",
        "metrics_rep1.jsonl",
        "metrics_rep2.jsonl",
        "summary.csv",
    ] {
        assert_eq!(read(&a.path().join(name)), read(&b.path().join(name)), "{name}");
    }
}

#[test]
fn repetitions_use_distinct_seeds() {
    let dir = tempfile::tempdir().unwrap();
    cmd_run(&affine(), dir.path(), true).unwrap();
    assert_ne!(
        read(&dir.path().join("metrics_rep0.jsonl")),
        read(&dir.path().join("metrics_rep1.jsonl"))
    );
}

#[test]
fn serialized_penalty_matches_its_parts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = affine();
    cmd_run(&cfg, dir.path(), true).unwrap();
    for r in read_metrics(&dir.path().join("metrics_rep0.jsonl")).unwrap() {
        let g = penalty_value(r.f_val, r.feas, cfg.solver.beta, cfg.solver.rho);
        assert!((g - r.g_val).abs() <= 1e-12 * (1.0 + g.abs()), "k={}", r.k);
    }
}

#[test]
fn affine_acceptance_setting_reaches_feasibility() {
    let mut cfg = affine();
    cfg.problem = ProblemSpec::AffineL1 { n: 10, p: 3, seed: 0 };
    cfg.solver.max_iters = 50_000;
    cfg.solver.record_every = 10_000;
    cfg.run.repetitions = 1;
    let dir = tempfile::tempdir().unwrap();
    let results = cmd_run(&cfg, dir.path(), true).unwrap();
    assert!(results[0].last().feas <= 1e-2);
    let mut rows = csv::Reader::from_path(dir.path().join("summary.csv")).unwrap();
    let headers = rows.headers().unwrap().clone();
    let col = headers.iter().position(|h| h == "final_feas").unwrap();
    let row = rows.records().next().unwrap().unwrap();
    assert!(row[col].parse::<f64>().unwrap() <= 1e-2);
}

#[test]
fn compare_writes_an_aligned_table() {
    let mut adam = affine();
    adam.solver.method = MethodSpec::ProxAdam {
        tau1: 1.0,
        tau2: 0.1,
        alpha: 0.1,
        eps: 1e-8,
    };
    let dir = tempfile::tempdir().unwrap();
    cmd_compare(&[("sgdm".into(), affine()), ("adam".into(), adam)], dir.path(), true).unwrap();
    let table = read(&dir.path().join("compare.csv"));
    let header = table.lines().next().unwrap();
    assert!(header.starts_with("k,sgdm.f_val"));
    assert!(header.contains("adam.kkt_residual"));
    assert_eq!(table.lines().count(), 1 + 9);
    assert!(dir.path().join("metrics_adam.jsonl").exists());
}

#[test]
fn compare_rejects_different_problems() {
    let mut other = affine();
    other.problem = ProblemSpec::Exactness1d { slope: 1.0 };
    let dir = tempfile::tempdir().unwrap();
    let err = cmd_compare(&[("a".into(), affine()), ("b".into(), other)], dir.path(), true).unwrap_err();
    assert!(matches!(err, CliError::Config(_)));
}

#[test]
fn sweep_over_rho_gives_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let rows = cmd_sweep(&affine(), "solver.rho", &[0.5, 2.0], dir.path(), true).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows.iter().filter(|r| r.selected).count(), 1);
    assert_eq!(read(&dir.path().join("sweep.csv")).lines().count(), 3);
}

#[test]
fn sweep_rejects_empty_values_and_unknown_parameters() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(
        cmd_sweep(&affine(), "solver.rho", &[], dir.path(), true),
        Err(CliError::Config(_))
    ));
    let err = cmd_sweep(&affine(), "solver.nonsense", &[1.0], dir.path(), true).unwrap_err();
    assert!(matches!(err, CliError::UnknownParameter(_)));
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.toml");
    std::fs::write(&good, AFFINE).unwrap();
    let out = dir.path().join("out");
    let o = elm(&[
        "run",
        "--config",
        good.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, AFFINE.replace("theta = 0.5", "theta = 7.0")).unwrap();
    let o = elm(&["run", "--config", bad.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("theta_max < beta"));

    let unknown = dir.path().join("unknown.toml");
    std::fs::write(&unknown, AFFINE.replace("[run]", "[run]\ncolour = 1")).unwrap();
    let o = elm(&[
        "run",
        "--config",
        unknown.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));

    let diverging = dir.path().join("diverging.toml");
    std::fs::write(&diverging, DIVERGING).unwrap();
    let o = elm(&[
        "run",
        "--config",
        diverging.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    // The partial trajectory is still summarized.
    assert!(read(&out.join("summary.csv")).contains("aborted"));

    let o = elm(&["run"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn seed_flag_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, AFFINE).unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    elm(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        a.to_str().unwrap(),
        "--quiet",
    ]);
    elm(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        b.to_str().unwrap(),
        "--seed",
        "99",
        "--quiet",
    ]);
    assert_ne!(read(&a.join("summary.csv")), read(&b.join("summary.csv")));
}

#[test]
fn list_problems_names_every_problem() {
    let o = elm(&["list-problems"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    for name in ["affine_l1", "slack_l1_net", "stochastic_affine", "exactness_1d"] {
        assert!(text.contains(name), "{name}");
    }
}

#[test]
fn config_round_trips_through_toml() {
    let mut cfg = affine();
    cfg.solver.eta = EtaSpec::InvSqrtTime {
        scale: 0.1,
        horizon: 100.0,
    };
    assert_eq!(RunConfig::from_toml_str(&cfg.to_toml_string()).unwrap(), cfg);
}
