use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_betti-thermo");

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env("BETTI_THERMO_CACHE", dir.join("cache"))
        .current_dir(dir)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn betti_on_square_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let square = fixture("square.pts");
    let out = run(
        dir.path(),
        &[
            "betti",
            "--points",
            square.to_str().unwrap(),
            "--r",
            "1.05",
            "--out",
            "sq",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout(&out).trim(), "beta: 1 1");
    assert!(dir.path().join("sq.betti.json").exists());
}

#[test]
fn complex_dump_of_triangle() {
    let dir = tempfile::tempdir().unwrap();
    let tri = fixture("triangle.pts");
    let out = run(
        dir.path(),
        &[
            "complex",
            "--points",
            tri.to_str().unwrap(),
            "--r",
            "1.2",
            "--max-dim",
            "2",
            "--out",
            "t",
        ],
    );
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "simplices: 3 3 1");
    let dump = std::fs::read_to_string(dir.path().join("t.complex.txt")).unwrap();
    assert_eq!(dump, "0\n1\n2\n0 1\n0 2\n1 2\n0 1 2\n");
}

#[test]
fn zero_intensity_rate() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["rate", "--lambda", "0", "--reps", "5", "--out", "z"]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("z.rate.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "quantity,k,lambda,r,L_or_n,mean,stderr,reps,seed,boundary_mode"
    );
    let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(fields[0], "betti_rate");
    assert_eq!((fields[5], fields[6]), ("0", "0"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("z.rate.json")).unwrap()).unwrap();
    assert_eq!(json["mean"], 0.0);
}

#[test]
fn invalid_settings_fail_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["rate", "--reps", "1", "--out", "bad"],
        vec!["rate", "--k", "2", "--dim", "2", "--out", "bad"],
        vec!["converge", "--density", "missing.json", "--out", "bad"],
        vec!["gap", "--n-schedule", "400,200", "--out", "bad"],
        vec!["checks", "--boxes", "3", "--out", "bad"],
        vec!["--out", "bad"],
    ] {
        let out = run(dir.path(), &args);
        assert!(!out.status.success(), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
    let unknown = run(dir.path(), &["frobnicate"]);
    assert!(!unknown.status.success());
    let written: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert!(written.is_empty(), "{written:?}");
}

#[test]
fn malformed_config_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.json"), r#"{"command": "rate", "radius": 2}"#).unwrap();
    let out = run(dir.path(), &["--config", "run.json"]);
    assert!(!out.status.success());
    std::fs::write(dir.path().join("run.json"), "{not json").unwrap();
    assert!(!run(dir.path(), &["--config", "run.json"]).status.success());
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.json"),
        r#"{"command": "rate", "dim": 1, "j": 1, "lambda": 1.0, "r": 0.25, "L": 100, "reps": 20, "boundary": "torus", "seed": 3, "out": "cfg"}"#,
    )
    .unwrap();
    let out = run(dir.path(), &["--config", "run.json", "--r", "0.5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("cfg.rate.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "simplex_rate");
    assert_eq!(row[3], "0.5");
    assert_eq!(row[8], "3");
    assert_eq!(row[9], "torus");
}

#[test]
fn worker_count_does_not_change_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let common = ["gap", "--n-schedule", "50,100", "--reps", "30", "--seed", "5"];
    for (w, prefix) in [("1", "w1"), ("3", "w3")] {
        let mut args = common.to_vec();
        args.extend(["--workers", w, "--out", prefix]);
        assert!(run(dir.path(), &args).status.success());
    }
    for ext in ["csv", "json", "dat"] {
        let a = std::fs::read(dir.path().join(format!("w1.gap.{ext}"))).unwrap();
        let b = std::fs::read(dir.path().join(format!("w3.gap.{ext}"))).unwrap();
        assert_eq!(a, b, "{ext}");
    }
}

#[test]
fn curve_plot_data_and_cache() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "curve", "--s-max", "1.0", "--s-step", "0.1", "--reps", "4", "--L", "100", "--out", "c",
    ];
    let first = run(dir.path(), &args);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let dat = std::fs::read_to_string(dir.path().join("c.curve.dat")).unwrap();
    let xs: Vec<f64> = dat
        .lines()
        .map(|l| l.split_whitespace().next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(xs.len(), 11);
    assert!(xs.windows(2).all(|w| w[0] < w[1]));
    assert!(dat.lines().all(|l| l.split_whitespace().count() == 3));
    let cached: Vec<_> = std::fs::read_dir(dir.path().join("cache")).unwrap().collect();
    assert_eq!(cached.len(), 1);
    assert!(run(dir.path(), &args).status.success());
    assert_eq!(std::fs::read_to_string(dir.path().join("c.curve.dat")).unwrap(), dat);
}

#[test]
fn converge_writes_table_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("density.json"),
        r#"{"dim": 2, "lower": [0, 0], "upper": [1, 1], "cells_per_axis": [2, 1], "values": [3, 1]}"#,
    )
    .unwrap();
    let out = run(
        dir.path(),
        &[
            "converge",
            "--density",
            "density.json",
            "--n-schedule",
            "50,100",
            "--reps",
            "10",
            "--target-reps",
            "4",
            "--L",
            "100",
            "--target",
            "curve",
            "--s-step",
            "0.1",
            "--s-max",
            "1.3",
            "--out",
            "cv",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).starts_with("expectation_per_n n=100"));
    let csv = std::fs::read_to_string(dir.path().join("cv.converge.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    let dat = std::fs::read_to_string(dir.path().join("cv.converge.dat")).unwrap();
    assert_eq!(dat.lines().count(), 2);
    assert!(dat.lines().all(|l| l.split_whitespace().count() == 2));
}

#[test]
fn sample_and_checks_commands() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &["sample", "--lambda", "2", "--L", "25", "--seed", "9", "--out", "s"],
    );
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("s.sample.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "x0,x1");
    let count: usize = stdout(&out).trim().strip_prefix("points: ").unwrap().parse().unwrap();
    assert_eq!(csv.lines().count(), count + 1);

    let out = run(dir.path(), &["checks", "--L", "100", "--reps", "20", "--out", "k"]);
    assert!(out.status.success(), "{}", stdout(&out));
    assert!(stdout(&out).contains("boundary_strip pass"));
}
