//! End-to-end checks of the binary: exit codes, artifact layout, and
//! byte-identical reruns.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fracpinn(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracpinn"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write_tiny_train(path: &Path) {
    fs::write(
        path,
        r#"
benchmark = "fpe/table1-row2"
dim = 2
alpha = 1.5
epochs = 0
n_test = 200

[fraclap]
n_gj = 4
n_gauss = 4
m_near = 8
m_far_in = 8
m_far_out = 16

[trial]
p = 4
hidden = [8, 8]
"#,
    )
    .unwrap();
}

#[test]
fn list_benchmarks_prints_registry() {
    let dir = tempfile::tempdir().unwrap();
    let out = fracpinn(&["list-benchmarks"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("fpe/table1-row1"));
    assert!(text.contains("tfde/singular"));
}

#[test]
fn train_zero_epochs_writes_record_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    write_tiny_train(&dir.path().join("cfg.toml"));
    let out = fracpinn(&["train", "--config", "cfg.toml", "--out", "run"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["run/qe.csv", "run/checkpoint.json", "run/summary.json", "run/resolved_config.toml", "run/qe_curve.svg"] {
        assert!(dir.path().join(f).is_file(), "missing {f}");
    }
    let csv = fs::read_to_string(dir.path().join("run/qe.csv")).unwrap();
    assert!(csv.starts_with("epoch,loss,e_test\n0,,"));
}

#[test]
fn unknown_config_key_exits_two_and_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), "benchmrk = \"x\"\n").unwrap();
    let out = fracpinn(&["train", "--config", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("benchmrk"));
}

#[test]
fn resume_without_checkpoint_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    write_tiny_train(&dir.path().join("cfg.toml"));
    let out = fracpinn(
        &["train", "--config", "cfg.toml", "--resume", "missing.json"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn operator_check_on_zero_solution_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("cfg.toml"),
        r#"
benchmark = "fpe/zero"
dim = 2
alpha = 1.5
n_points = 20
n_seeds = 2
"#,
    )
    .unwrap();
    let out = fracpinn(
        &["operator-check", "--config", "cfg.toml", "--out", "chk"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("chk/points.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[1].parse::<f64>().unwrap(), 0.0);
        assert_eq!(cols[3].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn reruns_are_byte_identical_regardless_of_threads() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    write_tiny_train(&cfg);
    // two epochs so the CSV has loss rows
    let text = fs::read_to_string(&cfg).unwrap().replace("epochs = 0", "epochs = 2");
    fs::write(&cfg, text).unwrap();
    let a = fracpinn(&["train", "--config", "cfg.toml", "--out", "a", "--quiet"], dir.path());
    let b = fracpinn(
        &["train", "--config", "cfg.toml", "--out", "b", "--quiet", "--threads", "3"],
        dir.path(),
    );
    assert!(a.status.success() && b.status.success());
    let csv_a = fs::read(dir.path().join("a/qe.csv")).unwrap();
    let csv_b = fs::read(dir.path().join("b/qe.csv")).unwrap();
    assert!(!csv_a.is_empty());
    assert_eq!(csv_a, csv_b);
}
