use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_switchpoint"))
}

fn linear_cfg() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/linear.cfg")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn switchpoint")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("read {name}: {e}"))
}

fn manifest_value(manifest: &str, key: &str) -> String {
    manifest
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("missing key {key} in manifest:\n{manifest}"))
        .to_string()
}

#[test]
fn grid_search_writes_surface_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "grid-search",
        "--config",
        linear_cfg().to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let surface = read(dir.path(), "surface.csv");
    assert!(surface.starts_with("t_on_C,t_off_C,j_per_hr\n"));
    let manifest = read(dir.path(), "manifest.txt");
    assert_eq!(manifest_value(&manifest, "argmax_t_on_c"), "13");
    assert_eq!(manifest_value(&manifest, "argmax_t_off_c"), "17");
    // The shipped setup misses the soft J target, so the manifest must carry
    // the desired-temperature sensitivity sweep.
    assert_eq!(manifest_value(&manifest, "soft_target_met"), "false");
    for t_d in ["14", "15", "16"] {
        manifest_value(&manifest, &format!("t_d_sweep_{t_d}"));
    }
    // The snapshot re-parses to the same canonical text.
    let snapshot = read(dir.path(), "config_snapshot.cfg");
    assert!(snapshot.contains("heat_capacity_j_per_k = 2000000"));
}

#[test]
fn train_is_deterministic_per_seed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = run(&[
            "train",
            "--algo",
            "stochastic",
            "--config",
            linear_cfg().to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
            "--seed",
            "7",
            "--days",
            "2",
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(read(a.path(), "train_log.csv"), read(b.path(), "train_log.csv"));
    assert_eq!(read(a.path(), "trace.csv"), read(b.path(), "trace.csv"));
    assert_eq!(read(a.path(), "params.txt"), read(b.path(), "params.txt"));

    let c = tempfile::tempdir().unwrap();
    let out = run(&[
        "train",
        "--algo",
        "stochastic",
        "--config",
        linear_cfg().to_str().unwrap(),
        "--out",
        c.path().to_str().unwrap(),
        "--seed",
        "8",
        "--days",
        "2",
    ]);
    assert!(out.status.success());
    assert_ne!(read(a.path(), "train_log.csv"), read(c.path(), "train_log.csv"));
}

#[test]
fn train_then_evaluate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "train",
        "--algo",
        "deterministic",
        "--config",
        linear_cfg().to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--days",
        "3",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let log = read(dir.path(), "train_log.csv");
    assert!(log.starts_with("k,t_s,dwell_s,action_C,reward,delta,jbar_per_hr,theta_on,theta_off,theta_sigma\n"));

    let eval_dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "evaluate",
        "--params",
        dir.path().join("params.txt").to_str().unwrap(),
        "--config",
        linear_cfg().to_str().unwrap(),
        "--out",
        eval_dir.path().to_str().unwrap(),
        "--days",
        "2",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = read(eval_dir.path(), "manifest.txt");
    let j: f64 = manifest_value(&manifest, "j_per_hr").parse().unwrap();
    assert!(j.is_finite() && j < 0.0);
}

#[test]
fn simulate_matches_limit_cycle_reference() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "simulate",
        "--config",
        linear_cfg().to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--t-on-c",
        "12.5",
        "--t-off-c",
        "17.5",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = read(dir.path(), "manifest.txt");
    let j: f64 = manifest_value(&manifest, "j_per_hr").parse().unwrap();
    let exact: f64 = manifest_value(&manifest, "limit_cycle_j_per_hr").parse().unwrap();
    assert!((j - exact).abs() / exact.abs() <= 5e-3, "J {j} vs limit cycle {exact}");
    assert!(read(dir.path(), "trace.csv").starts_with(
        "t_s,T_in_C,T_out_C,heater_on,event,action_C,step_reward,cum_reward,avg_reward_est\n"
    ));
}

#[test]
fn exit_codes_distinguish_config_and_usage_errors() {
    // Malformed config: exit 2 with a line-numbered diagnostic.
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "[building]\nheat_capacity_j_per_k = maybe\n").unwrap();
    let out = run(&[
        "grid-search",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains(":2") && err.contains("maybe"), "{err}");

    // Missing config file: exit 2.
    let out = run(&["grid-search", "--config", "/no/such/file.cfg", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    // Too few comparison seeds: exit 2.
    let out = run(&[
        "compare",
        "--config",
        linear_cfg().to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--seeds",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2));

    // Unknown subcommand: clap usage error, exit 2.
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unwritable_output_directory_is_a_runtime_error() {
    let out = run(&[
        "simulate",
        "--config",
        linear_cfg().to_str().unwrap(),
        "--out",
        "/proc/switchpoint-denied",
        "--days",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn compare_reports_both_methods() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "compare",
        "--config",
        linear_cfg().to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--seeds",
        "3",
        "--days",
        "3",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read(dir.path(), "report.txt");
    for key in [
        "event_median_eval_j_per_hr",
        "fixed_median_eval_j_per_hr",
        "fixed_event_control_median_eval_j_per_hr",
        "event_median_jbar_std_last5d",
        "fixed_median_jbar_std_last5d",
        "oracle_argmax_t_on_c",
    ] {
        manifest_value(&report, key);
    }
    let per_seed = read(dir.path(), "per_seed.csv");
    assert_eq!(per_seed.lines().count(), 4);
}

#[test]
fn worker_pool_env_var_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args([
            "grid-search",
            "--config",
            linear_cfg().to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
        ])
        .env("SWITCHPOINT_WORKERS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = bin()
        .args([
            "grid-search",
            "--config",
            linear_cfg().to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
        ])
        .env("SWITCHPOINT_WORKERS", "2")
        .output()
        .unwrap();
    assert!(out.status.success());
}
