use std::path::Path;
use std::process::{Command, Output};

fn kinanneal(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kinanneal")).args(args).current_dir(cwd).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

const SMALL: &str = "[ensemble]\nn = 8\nt_final = 40.0\nn_eval = 4\n";

#[test]
fn help_lists_every_subcommand() {
    let tmp = tempfile::tempdir().unwrap();
    let out = kinanneal(&["--help"], tmp.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for cmd in [
        "analyze-potential",
        "validate-schedule",
        "anneal",
        "ensemble",
        "dichotomy",
        "compare-baseline",
        "fokker-planck",
        "gamma-check",
        "lyapunov-check",
    ] {
        assert!(text.contains(cmd), "missing {cmd}");
    }
}

#[test]
fn configuration_errors_exit_with_2() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let bad = write(d, "bad.toml", "master_sed = 1\n");
    assert_eq!(kinanneal(&["anneal", "--config", &bad], d).status.code(), Some(2));
    let n0 = write(d, "n0.toml", "[ensemble]\nn = 0\n");
    assert_eq!(kinanneal(&["dichotomy", "--config", &n0], d).status.code(), Some(2));
    assert_eq!(kinanneal(&["anneal", "--config", "missing.toml"], d).status.code(), Some(2));
    assert_eq!(kinanneal(&["analyze-potential", "--threads", "0"], d).status.code(), Some(2));
    assert_eq!(kinanneal(&["no-such-command"], d).status.code(), Some(2));
}

#[test]
fn dichotomy_without_a_trap_names_the_assumption() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let cfg = write(d, "q.toml", "[potential]\nname = \"quadratic\"\n[ensemble]\nn = 4\n");
    let out = kinanneal(&["dichotomy", "--config", &cfg], d);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("non-global minimum"));
}

#[test]
fn inadmissible_schedule_exits_with_3() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let cfg = write(d, "fast.toml", "[schedule]\nform = \"logarithmic\"\nE = 0.2\n");
    let out = kinanneal(&["validate-schedule", "--config", &cfg, "--out", "v"], d);
    assert_eq!(out.status.code(), Some(3));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("v/schedule.json")).unwrap()).unwrap();
    assert_eq!(report["certificate"]["admissible"], false);
    assert_eq!(kinanneal(&["validate-schedule", "--out", "ok"], d).status.code(), Some(0));
}

#[test]
fn analysis_reports_the_double_well_barrier() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    assert!(kinanneal(&["analyze-potential", "--out", "a"], d).status.success());
    let r: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("a/analysis.json")).unwrap()).unwrap();
    let e_star = r["analysis"]["critical_depth"].as_f64().unwrap();
    assert!(e_star > 0.6 && e_star < 0.8, "{e_star}");
    assert_eq!(r["analysis"]["barriers"].as_array().unwrap().len(), 1);
}

#[test]
fn seed_override_is_reproducible_and_recorded() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let cfg = write(d, "s.toml", SMALL);
    let run = |seed: &str, out: &str| {
        assert!(kinanneal(&["ensemble", "--config", &cfg, "--seed", seed, "--out", out], d).status.success());
        (
            std::fs::read(d.join(out).join("trials.csv")).unwrap(),
            std::fs::read(d.join(out).join("ensemble.json")).unwrap(),
        )
    };
    let a = run("5", "a");
    let b = run("5", "b");
    let c = run("6", "c");
    assert_eq!(a, b);
    assert_ne!(a.0, c.0);
    let ja: serde_json::Value = serde_json::from_slice(&a.1).unwrap();
    let jc: serde_json::Value = serde_json::from_slice(&c.1).unwrap();
    assert_ne!(ja["fingerprint"]["config_hash"], jc["fingerprint"]["config_hash"]);
}

#[test]
fn baseline_csv_pairs_both_dynamics() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let cfg = write(d, "b.toml", SMALL);
    assert!(kinanneal(&["compare-baseline", "--config", &cfg, "--out", "b"], d).status.success());
    let csv = std::fs::read_to_string(d.join("b/baseline.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines
        .next()
        .unwrap()
        .starts_with("t,kinetic_p_hat,kinetic_wilson_low,kinetic_wilson_high,overdamped_p_hat"));
    assert_eq!(lines.count(), 4);
}

#[test]
fn fokker_planck_and_lyapunov_commands_run() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let cfg = write(
        d,
        "fp.toml",
        "[fokker_planck]\nt_final = 2.0\nn_checkpoints = 2\nnx = 40\nny = 40\n[lyapunov]\neps = [1.0]\nn_points = 512\n",
    );
    assert!(kinanneal(&["fokker-planck", "--config", &cfg, "--out", "f"], d).status.success());
    let csv = std::fs::read_to_string(d.join("f/fokker_planck.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(kinanneal(&["lyapunov-check", "--config", &cfg, "--out", "l"], d).status.success());
    let r: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("l/lyapunov.json")).unwrap()).unwrap();
    assert_eq!(r["all_pass"], true);
}
