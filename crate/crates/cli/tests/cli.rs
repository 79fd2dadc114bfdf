use std::path::Path;
use std::process::{Command, Output};

fn sensesend(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sensesend")).args(args).output().expect("spawn sensesend")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn simulate_then_validate() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("run.csv");
    for scheme in ["itsso", "nc", "fsl"] {
        let out = sensesend(&["simulate", "--seed", "5", "--scheme", scheme, "--trace", p(&trace)]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let text = std::fs::read_to_string(&trace).unwrap();
        assert!(text.starts_with("slot,uav,slot_type,x,y,z,granted,rate_bits,residual_bits"));
        let out = sensesend(&["validate", "--trace", p(&trace)]);
        assert!(out.status.success(), "{}", stdout(&out));
        assert!(stdout(&out).starts_with("ok:"));
    }
}

#[test]
fn validate_rejects_tampered_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("run.csv");
    assert!(sensesend(&["simulate", "--seed", "2", "--trace", p(&trace)]).status.success());
    let text = std::fs::read_to_string(&trace).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
    // Teleport one UAV far away in the middle of the run.
    let mid = lines.len() / 2;
    let mut cols: Vec<String> = lines[mid].split(',').map(str::to_owned).collect();
    cols[3] = "5000".into();
    lines[mid] = cols.join(",");
    std::fs::write(&trace, lines.join("\n") + "\n").unwrap();
    let out = sensesend(&["validate", "--trace", p(&trace)]);
    assert!(!out.status.success());
    assert!(stdout(&out).contains("violation"));
}

#[test]
fn unknown_config_key_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "uavs = 20\nbogus = 1\n").unwrap();
    let out = sensesend(&["simulate", "--config", p(&cfg), "--trace", p(&dir.path().join("t.csv"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
}

#[test]
fn config_file_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    std::fs::write(&cfg, "uavs = 4\ntasks = 4\nworkers_per_task = 2\nseed = 9\n[sensing]\nthreshold = 0.8\n").unwrap();
    let trace = dir.path().join("t.csv");
    let out = sensesend(&["simulate", "--config", p(&cfg), "--trace", p(&trace)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("seed=9"));
    let text = std::fs::read_to_string(&trace).unwrap();
    let uavs: std::collections::BTreeSet<&str> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(uavs.len(), 4);
}

#[test]
fn analyze_ops() {
    let out = sensesend(&["analyze", "--op", "dtdq"]);
    let v: f64 = stdout(&out).trim().parse().unwrap();
    assert!((v + 1.4792792044176593).abs() < 1e-9);
    let out = sensesend(&["analyze", "--op", "dtdpr", "--params", "q=4,prth=0.9"]);
    let v: f64 = stdout(&out).trim().parse().unwrap();
    assert!((v - 25.697711826912879).abs() < 1e-6);
    let out = sensesend(&["analyze", "--op", "minq", "--params", "prth=0.999"]);
    assert_eq!(stdout(&out).trim(), "3");
    assert!(!sensesend(&["analyze", "--op", "dtdq", "--params", "nope=1"]).status.success());
}

#[test]
fn experiment_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = sensesend(&["experiment", "--id", "fig6", "--instances", "2", "--out", p(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("fig6.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("scheme,x,mean_Tmax,std_Tmax,n"));
    assert_eq!(lines.count(), 15);
    assert!(dir.path().join("fig6_raw.csv").exists());
    assert!(dir.path().join("fig6_manifest.txt").exists());
    assert!(!sensesend(&["experiment", "--id", "fig99", "--out", p(dir.path())]).status.success());
}

#[test]
fn shipped_config_matches_defaults() {
    let cfg = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/default.toml");
    let dir = tempfile::tempdir().unwrap();
    let a = sensesend(&["simulate", "--config", cfg, "--trace", p(&dir.path().join("a.csv"))]);
    let b = sensesend(&["simulate", "--trace", p(&dir.path().join("b.csv"))]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(stdout(&a).lines().next(), stdout(&b).lines().next());
}
