use std::path::Path;
use std::process::{Command, Output};

fn felsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_felsim"))
        .args(args)
        .env("FELSIM_LOG", "error")
        .output()
        .unwrap()
}

const SMALL: &str = "\
[scenario]
name = small
seed = 3
duration_ms = 5000

[topology]
communities = 2

[requesters]
c0 = community=0 slot=0 class=A model=zipf exponent=1 mean_ms=50
c1 = community=1 slot=0 class=B model=periodic period_ms=100 playlist=0,1,2

[arm.cloud]
fel = false
bs_cs_capacity = 0

[arm.fel]
fel = true
bs_cs_capacity = 10
";

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn validate_accepts_and_rejects() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "good.ini", SMALL);
    let out = felsim(&["validate", "--config", &good]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("ok"));

    let bad = write(dir.path(), "bad.ini", &SMALL.replace("duration_ms = 5000", "duration_ms = 0"));
    let out = felsim(&["validate", "--config", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("duration_ms"));

    let missing = dir.path().join("nope.ini");
    let out = felsim(&["validate", "--config", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_writes_csvs_and_keeps_metrics_off_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.ini", SMALL);
    let out_dir = dir.path().join("out");
    let out = felsim(&["run", "--config", &cfg, "--seed", "4", "--out", out_dir.to_str().unwrap(), "--jobs", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stderr.is_empty());
    let metrics = std::fs::read_to_string(out_dir.join("metrics.csv")).unwrap();
    let mut lines = metrics.lines();
    assert!(lines.next().unwrap().starts_with("scenario,run_seed,requester,"));
    assert!(lines.all(|l| l.starts_with("small,4,")));
    assert!(out_dir.join("counters.csv").exists());
    assert!(out_dir.join("epochs.csv").exists());
}

#[test]
fn run_rejects_bad_config_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "broken.ini", "[scenario\nname = x\n");
    let out = felsim(&["run", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("o").exists());
}

#[test]
fn scenario_runs_several_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("a");
    let out = felsim(&["scenario", "a", "--seeds", "2", "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(out_dir.join("metrics.csv")).unwrap();
    let seeds: std::collections::BTreeSet<&str> =
        text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(seeds.into_iter().collect::<Vec<_>>(), ["1", "2"]);
}
