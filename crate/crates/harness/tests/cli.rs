use std::path::Path;
use std::process::{Command, Output};

use regem_harness::experiment::{run_convergence_experiment, RunOptions};
use regem_harness::Preset;

fn regem(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_regem"))
        .args(args)
        .current_dir(dir)
        .env("REGEM_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn presets_list_names_all_four() {
    let dir = tempfile::tempdir().unwrap();
    let out = regem(&["presets", "list"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["gmm", "mlr-sparse", "mlr-lowrank", "mcr"] {
        assert!(
            text.lines().any(|l| l.starts_with(name)),
            "{name} missing from:\n{text}"
        );
    }
}

#[test]
fn convergence_is_deterministic_and_complete() {
    let dir = tempfile::tempdir().unwrap();
    for f in ["a.csv", "b.csv"] {
        let out = regem(
            &[
                "convergence",
                "--preset",
                "gmm",
                "--trials",
                "2",
                "--seed",
                "7",
                "--out",
                f,
            ],
            dir.path(),
        );
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = read(&dir.path().join("a.csv"));
    assert_eq!(a, read(&dir.path().join("b.csv")));
    let mut lines = a.lines();
    assert_eq!(lines.next(), Some("trial,t,lambda_t,est_error,opt_error"));
    let t_max = Preset::builtin("gmm").unwrap().t_max;
    assert_eq!(lines.count(), 2 * (t_max + 1));
    assert!(dir.path().join("a.json").exists());
}

#[test]
fn config_rerun_reproduces_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = regem(
        &[
            "convergence",
            "--preset",
            "mcr",
            "--trials",
            "1",
            "--seed",
            "11",
            "--out",
            "first.csv",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = regem(
        &["convergence", "--config", "first.json", "--out", "second.csv"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        read(&dir.path().join("first.csv")),
        read(&dir.path().join("second.csv"))
    );
}

#[test]
fn single_point_rate_grid() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("grid.json"), r#"{"points":[{"n":200,"p":50,"s":3}]}"#).unwrap();
    let out = regem(
        &[
            "rate",
            "--model",
            "gmm",
            "--grid",
            "grid.json",
            "--trials",
            "2",
            "--out",
            "rate.csv",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = read(&dir.path().join("rate.csv"));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "p,n,s_or_theta,normalized_complexity,mean_final_error,stderr");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("50,200,3,"));
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        regem(&["convergence", "--preset", "nope"], dir.path()).status.code(),
        Some(2)
    );
    assert_eq!(regem(&["convergence"], dir.path()).status.code(), Some(2));
    assert_eq!(
        regem(
            &["convergence", "--preset", "gmm", "--mcr-noise-inflate", "3"],
            dir.path()
        )
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn selftest_passes_and_writes_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    let out = regem(&["selftest", "--fixtures", "fx"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(read(&dir.path().join("fx/convergence_fixture.csv")).starts_with("trial,t,lambda_t"));
    assert!(read(&dir.path().join("fx/rate_fixture.csv")).starts_with("p,n,s_or_theta"));
}

#[test]
fn initial_error_matches_omega_radius() {
    let pr = Preset::builtin("gmm").unwrap();
    let opts = RunOptions {
        trials: 3,
        ..RunOptions::from_preset(&pr)
    };
    let rep = run_convergence_experiment(&pr, &opts).unwrap();
    for res in &rep.results {
        let want = pr.omega * res.beta_star.l2();
        let got = res.trace.records[0].est_error;
        assert!((got - want).abs() < 1e-12 * want, "{got} vs {want}");
    }
}
