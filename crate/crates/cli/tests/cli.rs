use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

fn fcs(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fcs"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn manifest(out: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn equal_weights_are_rejected_quickly_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let start = Instant::now();
    let res = fcs(&["spectrum", "--beta", "1", "--gamma", "1"], &out);
    assert!(start.elapsed() < Duration::from_secs(2));
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("gamma"));
    assert!(!out.exists());
}

#[test]
fn unknown_config_key_is_a_configuration_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.cfg");
    fs::write(&cfg, "beta = 1\nvolatility = 3\n").unwrap();
    let res = fcs(&["spectrum", "--config", cfg.to_str().unwrap()], &tmp.path().join("out"));
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("volatility"));
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.cfg");
    fs::write(&cfg, "# weights\nbeta = 0.5\ngamma = 3\ncells = 20\n").unwrap();
    let out = tmp.path().join("out");
    let res = fcs(&["spectrum", "--config", cfg.to_str().unwrap(), "--cells", "24"], &out);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let m = manifest(&out);
    assert_eq!(m["config"]["cells"], "24");
    assert_eq!(m["config"]["gamma"], "3");
}

#[test]
fn spectrum_table_has_one_row_per_mode() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let res = fcs(&["spectrum", "--cells", "64"], &out);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let text = fs::read_to_string(out.join("spectrum.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "k,singular_value,relative_to_first");
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert!(!rows.is_empty() && rows.len() <= 64);
    assert!(rows.iter().all(|r| r.len() == 3));
    assert!(rows.windows(2).all(|p| p[1][1] <= p[0][1]));
    assert_eq!(rows[0][2], 1.0);
}

#[test]
fn approximate_respects_its_bounds() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let res = fcs(&["approximate", "--rank", "4", "--eps", "0.01", "--paths", "8", "--seed", "3"], &out);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stdout));
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    let last = summary.lines().last().unwrap();
    assert!(last.starts_with("summary,4,"));
    let worst: f64 = last.split(',').nth(3).unwrap().parse().unwrap();
    assert!(worst <= 1.0);
    assert!(out.join("errors.csv").exists());
}

#[test]
fn simulation_outputs_are_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["simulate", "--paths", "6", "--seed", "17", "--t-max", "0.25", "--snapshots", "true"];
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(fcs(&args, &a).status.code(), Some(0));
    assert_eq!(fcs(&args, &b).status.code(), Some(0));
    assert_eq!(fs::read(a.join("paths.csv")).unwrap(), fs::read(b.join("paths.csv")).unwrap());
    assert_eq!(
        fs::read(a.join("snapshots/path_00005_terminal.txt")).unwrap(),
        fs::read(b.join("snapshots/path_00005_terminal.txt")).unwrap()
    );
    let (ma, mb) = (manifest(&a), manifest(&b));
    assert_eq!(ma["checks"], mb["checks"]);
    assert_eq!(ma["outputs"], mb["outputs"]);
}

#[test]
fn bad_thread_count_is_a_configuration_error() {
    let tmp = tempfile::tempdir().unwrap();
    let res = Command::new(env!("CARGO_BIN_EXE_fcs"))
        .args(["spectrum", "--out"])
        .arg(tmp.path().join("out"))
        .env("FCS_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(2));
}
