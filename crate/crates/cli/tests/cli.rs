use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sorq_core::exact::{q_value_iteration, RelaxationFactor};
use sorq_core::mdp::read_mdp;

fn sorq(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sorq"))
        .args(args)
        .current_dir(dir)
        .env_remove("SORQ_JOBS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], dir: &Path) -> String {
    let out = sorq(args, dir);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn failing(args: &[&str], dir: &Path) -> String {
    let out = sorq(args, dir);
    assert!(!out.status.success(), "{args:?} unexpectedly succeeded");
    String::from_utf8(out.stderr).unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

fn one_state(dir: &Path) {
    fs::write(dir.join("one.txt"), "mdp 1 1 0.9\nP 0 0 1\nR 0 0 1\n").unwrap();
}

/// Field `col` of data row `row`, skipping the header.
fn column(csv: &str, row: usize, col: usize) -> String {
    csv.lines().nth(row + 1).unwrap().split(',').nth(col).unwrap().to_string()
}

fn v_star_norm(mdp_path: &Path) -> f64 {
    let mdp = read_mdp(mdp_path).unwrap();
    let q = q_value_iteration(&mdp, RelaxationFactor::ONE, 1e-8, 1_000_000).unwrap();
    q.solution.greedy_values().max_norm()
}

#[test]
fn generate_is_deterministic_and_prints_w_star() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["generate", "--states", "10", "--actions", "5", "--discount", "0.9", "--min-self-loop", "0.05", "--seed", "1"];
    let a = ok(&[&args[..], &["--out", "a.txt"]].concat(), dir.path());
    let b = ok(&[&args[..], &["--out", "b.txt"]].concat(), dir.path());
    assert_eq!(a, b);
    assert_eq!(read(dir.path(), "a.txt"), read(dir.path(), "b.txt"));
    let w: f64 = a.trim().parse().unwrap();
    assert!(w > 1.0 && w <= 10.0, "w* = {w}");
    assert!(read(dir.path(), "a.manifest.txt").contains("manifest.command = generate\n"));
}

#[test]
fn generate_rejects_full_self_loop() {
    let dir = tempfile::tempdir().unwrap();
    let err = failing(
        &["generate", "--states", "1", "--actions", "1", "--discount", "0.9", "--min-self-loop", "1.0", "--out", "x.txt"],
        dir.path(),
    );
    assert!(err.contains("min_self_loop"), "{err}");
    assert!(!dir.path().join("x.txt").exists());
}

#[test]
fn solve_single_state_model() {
    let dir = tempfile::tempdir().unwrap();
    one_state(dir.path());

    let plain = ok(&["solve", "--mdp", "one.txt", "--w", "1", "--out", "v1.csv"], dir.path());
    assert_eq!(plain.lines().next().unwrap(), "w,iterations,final_residual,converged");
    let iterations: usize = column(&plain, 0, 1).parse().unwrap();
    assert!(iterations > 100, "{iterations}");
    let v: f64 = column(&read(dir.path(), "v1.csv"), 0, 1).parse().unwrap();
    assert!((v - 10.0).abs() < 1e-6);

    let relaxed = ok(&["solve", "--mdp", "one.txt", "--w", "w_star", "--out", "v2.csv"], dir.path());
    let iterations: usize = column(&relaxed, 0, 1).parse().unwrap();
    assert!((1..=2).contains(&iterations), "{iterations}");
    let v: f64 = column(&read(dir.path(), "v2.csv"), 0, 1).parse().unwrap();
    assert!((v - 10.0).abs() < 1e-9);

    let err = failing(&["solve", "--mdp", "one.txt", "--w", "50", "--out", "v3.csv"], dir.path());
    assert!(err.contains("exceeds w*"), "{err}");
}

#[test]
fn solve_q_table_and_unconverged_exit() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["generate", "--seed", "3", "--out", "m.txt"], dir.path());
    ok(&["solve", "--mdp", "m.txt", "--q", "--w", "w_star", "--out", "q.csv"], dir.path());
    let q = read(dir.path(), "q.csv");
    assert_eq!(q.lines().next().unwrap(), "state,action,q");
    assert_eq!(q.lines().count(), 1 + 50);

    let out = sorq(&["solve", "--mdp", "m.txt", "--max-iter", "3", "--out", "short.csv"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains(",3,"));
    assert!(dir.path().join("short.csv").exists());
    assert!(read(dir.path(), "short.manifest.txt").contains("manifest.result.converged = false"));
}

#[test]
fn solve_rejects_bad_model_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.txt"), "mdp 1 1 0.9\nP 0 0 0.5\nR 0 0 1\n").unwrap();
    failing(&["solve", "--mdp", "bad.txt", "--out", "v.csv"], dir.path());
    failing(&["solve", "--mdp", "missing.txt", "--out", "v.csv"], dir.path());
}

#[test]
fn learn_w_one_matches_standard_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["generate", "--seed", "2", "--out", "m.txt"], dir.path());
    let common = ["learn", "--mdp", "m.txt", "--steps", "5000", "--record-every", "250", "--seed", "9"];
    ok(&[&common[..], &["--algo", "q", "--out", "q.csv"]].concat(), dir.path());
    ok(&[&common[..], &["--algo", "sorq", "--w", "1", "--out", "s.csv"]].concat(), dir.path());
    assert_eq!(read(dir.path(), "q.csv"), read(dir.path(), "s.csv"));
    assert_eq!(read(dir.path(), "q.q.csv"), read(dir.path(), "s.q.csv"));
    assert_eq!(read(dir.path(), "q.csv").lines().count(), 1 + 21);
}

#[test]
fn learn_zero_steps_records_initial_error() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["generate", "--seed", "4", "--out", "m.txt"], dir.path());
    ok(&["learn", "--mdp", "m.txt", "--steps", "0", "--out", "t.csv"], dir.path());
    let trace = read(dir.path(), "t.csv");
    assert_eq!(trace.lines().count(), 2);
    assert_eq!(column(&trace, 0, 0), "0");
    let e: f64 = column(&trace, 0, 1).parse().unwrap();
    assert!((e - v_star_norm(&dir.path().join("m.txt"))).abs() < 1e-12);
}

#[test]
fn learn_reduces_error_at_w_star() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["generate", "--seed", "1", "--out", "m.txt"], dir.path());
    ok(
        &["learn", "--mdp", "m.txt", "--algo", "sorq", "--w", "w_star", "--steps", "100000", "--record-every", "10000", "--out", "t.csv", "--q-out", "final_q.csv"],
        dir.path(),
    );
    let trace = read(dir.path(), "t.csv");
    let first: f64 = column(&trace, 0, 1).parse().unwrap();
    let last: f64 = column(&trace, 10, 1).parse().unwrap();
    assert!(last < first, "{last} vs {first}");
    assert!(dir.path().join("final_q.csv").exists());
}

#[test]
fn learn_rejects_w_above_w_star() {
    let dir = tempfile::tempdir().unwrap();
    one_state(dir.path());
    let err = failing(&["learn", "--mdp", "one.txt", "--w", "11", "--out", "t.csv"], dir.path());
    assert!(err.contains("exceeds w*"), "{err}");
}

#[test]
fn experiment_without_steps_reports_v_star_norm() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.txt"), "num_mdps = 1\nsteps = 0\nmaster_seed = 11\n").unwrap();
    ok(&["experiment", "--config", "c.txt", "--out", "run"], dir.path());

    // rebuild the single instance through the manifest's own seed derivation
    let cfg = sorq_core::experiments::parse_experiment_config(&read(dir.path(), "run/manifest.txt")).unwrap();
    let mdp = sorq_core::mdp::generate_random_mdp(&sorq_core::GeneratorConfig {
        seed: cfg.instance_seed(0),
        ..cfg.generator.clone()
    })
    .unwrap();
    let q = q_value_iteration(&mdp, RelaxationFactor::ONE, 1e-8, 1_000_000).unwrap();
    let norm = q.solution.greedy_values().max_norm();

    let summary = read(dir.path(), "run/summary.csv");
    assert_eq!(summary.lines().count(), 3);
    for row in 0..2 {
        let e: f64 = column(&summary, row, 2).parse().unwrap();
        assert_eq!(e, norm);
    }
}

#[test]
fn experiment_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = "num_mdps = 6\nmaster_seed = 5\nsteps = 3000\nlearner.record_every = 500\narms = q, sorq@w_mid, sorq@w_star\n";
    fs::write(dir.path().join("c.txt"), config).unwrap();
    ok(&["experiment", "--config", "c.txt", "--out", "a"], dir.path());
    ok(&["experiment", "--config", "c.txt", "--out", "b", "--jobs", "1"], dir.path());
    ok(&["experiment", "--config", "a/manifest.txt", "--out", "c", "--jobs", "3"], dir.path());
    for file in ["error_curves.csv", "per_mdp.csv", "summary.csv"] {
        let a = read(dir.path(), &format!("a/{file}"));
        assert_eq!(a, read(dir.path(), &format!("b/{file}")), "{file}");
        assert_eq!(a, read(dir.path(), &format!("c/{file}")), "{file}");
        assert!(!a.contains('\r'));
    }
    let manifest = read(dir.path(), "a/manifest.txt");
    assert!(manifest.contains("manifest.command = experiment\n"));
    assert!(manifest.contains("learner.theta = 0.7\n"));
}

#[test]
fn experiment_jobs_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.txt"), "num_mdps = 2\nsteps = 100\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_sorq"))
        .args(["experiment", "--config", "c.txt", "--out", "run"])
        .current_dir(dir.path())
        .env("SORQ_JOBS", "1")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(read(dir.path(), "run/manifest.txt").contains("jobs = 1\n"));
}

#[test]
fn experiment_config_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.txt"), "num_mdps = 2\n# fine\nlearner.theta = fast\n").unwrap();
    let err = failing(&["experiment", "--config", "c.txt", "--out", "run"], dir.path());
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn reference_experiment_favours_sor() {
    let dir = tempfile::tempdir().unwrap();
    let config = "num_mdps = 100\nmaster_seed = 1\nsteps = 100000\nlearner.record_every = 1000\nlearner.theta = 1.0\narms = q, sorq@w_star\n";
    fs::write(dir.path().join("c.txt"), config).unwrap();
    ok(&["experiment", "--config", "c.txt", "--out", "run"], dir.path());
    let summary = read(dir.path(), "run/summary.csv");
    let q: f64 = column(&summary, 0, 2).parse().unwrap();
    let sor: f64 = column(&summary, 1, 2).parse().unwrap();
    assert!(sor < q, "{sor} vs {q}");
}
