//! End-to-end tests of the `bpg` binary: outputs, replay and exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bpg_cli::trace_csv::parse_trace_csv;

fn bpg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bpg"))
        .args(args)
        .env_remove("BPG_OUT_DIR")
        .output()
        .expect("bpg binary runs")
}

fn repo_config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const SMALL: &str = r#"
[problem]
name = "cubic_fs"
n = 16

[solver]
algorithm = "alg1"
epsilon = 1e-2
seed = 3
"#;

#[test]
fn run_writes_cube_root_trace() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = repo_config("example2.toml");
    let out = bpg(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = parse_trace_csv(&tmp.path().join("example2_trace.csv")).unwrap();
    assert_eq!(rows.len(), 1001);
    for r in &rows {
        let want = (r.k as f64).cbrt();
        assert!((r.x[0] - want).abs() <= 1e-12 * want.max(1.0), "k={} x={}", r.k, r.x[0]);
    }
    let summary = std::fs::read_to_string(tmp.path().join("example2_summary.json")).unwrap();
    assert!(summary.contains("\"algorithm\": \"bpg\""));
}

#[test]
fn out_dir_env_is_honoured() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "small.toml", SMALL);
    let target = tmp.path().join("env_out");
    let out = Command::new(env!("CARGO_BIN_EXE_bpg"))
        .args(["run", "--config", cfg.to_str().unwrap()])
        .env("BPG_OUT_DIR", &target)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(target.join("small_trace.csv").is_file());
    assert!(target.join("small_summary.json").is_file());
}

#[test]
fn replay_matches_and_detects_tampering() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().to_str().unwrap();
    let cfg = write(tmp.path(), "small.toml", SMALL);
    let cfg = cfg.to_str().unwrap();
    assert_eq!(bpg(&["run", "--config", cfg, "--out", dir]).status.code(), Some(0));
    let trace = tmp.path().join("small_trace.csv");
    let first = std::fs::read(&trace).unwrap();
    assert_eq!(bpg(&["run", "--config", cfg, "--out", dir]).status.code(), Some(0));
    assert_eq!(first, std::fs::read(&trace).unwrap(), "reruns must be byte identical");

    let t = trace.to_str().unwrap();
    assert_eq!(bpg(&["replay", "--config", cfg, "--trace", t]).status.code(), Some(0));
    assert_eq!(
        bpg(&["replay", "--config", cfg, "--trace", t, "--seed", "4"])
            .status
            .code(),
        Some(1)
    );

    let text = String::from_utf8(first).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    let edited = lines[2].replacen(",0,0,", ",1,0,", 1);
    lines[2] = &edited;
    std::fs::write(&trace, lines.join("\n") + "\n").unwrap();
    let out = bpg(&["replay", "--config", cfg, "--trace", t]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn sweep_writes_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "sw.toml",
        &format!("{SMALL}stop_at_eps = true\n\n[sweep]\nseed_count = 2\n"),
    );
    let out = bpg(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--axis",
        "n=8,16,32",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let runs = std::fs::read_to_string(tmp.path().join("sw_runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 1 + 6);
    let trend = std::fs::read_to_string(tmp.path().join("sw_trend.csv")).unwrap();
    assert!(trend.starts_with("axis,slope,intercept,r2\nn,"));
}

#[test]
fn config_problems_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write(tmp.path(), "bad.toml", &SMALL.replace("alg1", "alg7"));
    let out = bpg(&["run", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("solver.algorithm"));

    assert_eq!(bpg(&["run", "--config", "/nonexistent/x.toml"]).status.code(), Some(2));
    assert_eq!(bpg(&["verify", "--suite", "nonsense"]).status.code(), Some(2));
    let good = write(tmp.path(), "good.toml", SMALL);
    assert_eq!(
        bpg(&["sweep", "--config", good.to_str().unwrap(), "--axis", "tau=1,2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(bpg(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn kernel_suite_passes() {
    let out = bpg(&["verify", "--suite", "kernels"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("PASS"));
}

#[test]
fn verify_reads_suites_from_config() {
    let out = bpg(&["verify", "--config", repo_config("verify.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(String::from_utf8_lossy(&out.stdout).matches("criterion").count(), 3);
}

#[test]
fn shipped_configs_parse() {
    for entry in std::fs::read_dir(repo_config("")).unwrap() {
        let path = entry.unwrap().path();
        let cfg = bpg_cli::ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{e}"));
        cfg.resolve(Default::default()).unwrap_or_else(|e| panic!("{e}"));
    }
}
