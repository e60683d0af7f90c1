use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use cogtrack::policy::QTable;

fn cogtrack(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cogtrack"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

#[test]
fn evaluate_is_byte_identical_across_invocations() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["evaluate", "--policy", "scaling", "--seed", "4", "--runs", "8"];
    for dir in [&a, &b] {
        let o = cogtrack(&args, dir.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in ["metrics_scaling.csv", "histogram_scaling.csv"] {
        let x = fs::read(a.path().join(name)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn trace_is_byte_identical_and_seed_sensitive() {
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    for (dir, seed) in dirs.iter().zip(["9", "9", "10"]) {
        let o = cogtrack(&["trace", "--policy", "fixed:2.5e6", "--seed", seed], dir.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let read = |i: usize| fs::read(dirs[i].path().join("trace_fixed_2.5e6.csv")).unwrap();
    assert_eq!(read(0), read(1));
    assert_ne!(read(0), read(2));
}

#[test]
fn training_with_no_runs_leaves_zero_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = cogtrack(&["train", "--policy", "qlearn", "--runs", "0", "--seed", "2"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = QTable::load(&dir.path().join("qtable.json")).unwrap();
    assert_eq!(table.n_actions(), 6);
    assert!(table.values().iter().all(|&q| q == 0.0));
}

#[test]
fn compare_writes_a_summary_row_per_policy() {
    let dir = tempfile::tempdir().unwrap();
    let o = cogtrack(
        &["compare", "--policy", "fixed:1e6,fixed:1e7,scaling", "--runs", "4", "--transmissions", "40"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), 4, "{text}");
    assert!(lines[1].starts_with("fixed:1e6,"));
    assert!(lines[3].starts_with("scaling,"));
}

#[test]
fn generate_and_calibrate_write_their_files() {
    let dir = tempfile::tempdir().unwrap();
    assert!(cogtrack(&["generate-trajectory"], dir.path()).status.success());
    let csv = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert!(csv.lines().count() > 161);
    assert!(cogtrack(&["calibrate", "--runs", "6"], dir.path()).status.success());
    let edges = fs::read_to_string(dir.path().join("edges.json")).unwrap();
    assert!(edges.contains("pred_var_edges"));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cogtrack(&["frobnicate"], dir.path()).status.code(), Some(1));
    assert_eq!(cogtrack(&["evaluate", "--policy", "bogus"], dir.path()).status.code(), Some(1));
}

#[test]
fn missing_inputs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    let missing = missing.to_str().unwrap();
    assert_eq!(cogtrack(&["evaluate", "--config", missing], dir.path()).status.code(), Some(2));
    assert_eq!(
        cogtrack(&["evaluate", "--policy", "qlearn", "--qtable", missing], dir.path()).status.code(),
        Some(2)
    );
}
