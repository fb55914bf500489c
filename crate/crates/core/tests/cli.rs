use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_growing-experts"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

const MINIMAL: &str = r#"
[[scenarios]]
name = "tiny"
horizon = 20
family = { kind = "bernoulli" }
entry = { kind = "periodic", period = 4 }

[[algorithms]]
name = "growing_hedge"
"#;

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn list_presets() {
    let out = run(&["list-presets"]);
    assert!(out.status.success());
    let s = String::from_utf8(out.stdout).unwrap();
    assert!(s.contains("growing_hedge") && s.contains("entry_time_uniform"));
    assert_eq!(s.lines().filter(|l| l.starts_with("  ")).count(), 16);
}

#[test]
fn minimal_config_writes_one_trace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", MINIMAL);
    let out_dir = dir.path().join("out");
    let out = run(&["run", "--config", &cfg, "--out-dir", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let csv: Vec<_> = std::fs::read_dir(&out_dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_some_and(|x| x == "csv"))
        .collect();
    assert_eq!(csv.len(), 1);
}

#[test]
fn full_config_writes_one_report_per_pair() {
    let dir = tempfile::tempdir().unwrap();
    let body = serde_json::json!({
        "scenarios": [
            {"name": "a", "horizon": 30, "family": {"kind": "bernoulli"}, "entry": {"kind": "exponential"}},
            {"name": "b", "horizon": 30, "family": {"kind": "drifting_mean"}, "entry": {"kind": "burst", "rounds": [10], "size": 3}, "seed": 4}
        ],
        "algorithms": [
            {"name": "growing_hedge", "prior": "entry_time_uniform"},
            {"name": "fresh_markov_hedge"},
            {"name": "growing_markov_hedge", "alpha": "inverse"},
            {"name": "growing_sleeping_markov_hedge", "alpha": {"constant": 0.05}, "beta": "inverse"}
        ],
        "comparators": [{"class": "since_entry"}, {"class": "admissible", "max_shifts": 2}],
        "output": {"dir": dir.path().join("reports")}
    });
    let cfg = write(dir.path(), "c.json", &body.to_string());
    let out = run(&["run", "--config", &cfg, "--stdout"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let reports: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(reports.as_array().unwrap().len(), 8);
    let n = std::fs::read_dir(dir.path().join("reports")).unwrap().count();
    assert_eq!(n, 16);
}

#[test]
fn missing_horizon_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &MINIMAL.replace("horizon = 20\n", ""));
    let out = run(&["run", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("horizon"));
}

#[test]
fn unknown_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &format!("{MINIMAL}verbose = true\n"));
    assert_eq!(run(&["run", "--config", &cfg]).status.code(), Some(2));
}

#[test]
fn invalid_pairing_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    // hedge needs the whole expert set at round 1
    let cfg = write(dir.path(), "c.toml", &MINIMAL.replace("growing_hedge", "hedge"));
    let out = run(&["run", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_oracle_passes() {
    let out = run(&["verify", "oracle", "--seeds", "50"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("PASS"));
}

#[test]
fn verify_bounds_is_deterministic() {
    let strip = |o: Output| -> Vec<String> {
        String::from_utf8(o.stdout)
            .unwrap()
            .lines()
            .map(|l| l.split(" in ").next().unwrap().to_string())
            .collect()
    };
    let a = run(&["verify", "bounds", "--seeds", "8"]);
    assert_eq!(a.status.code(), Some(0));
    let b = run(&["verify", "bounds", "--seeds", "8"]);
    assert_eq!(strip(a), strip(b));
}

#[test]
fn verify_coincidence_passes() {
    let out = run(&["verify", "coincidence", "--seeds", "20"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FreshMarkovHedge"));
}
