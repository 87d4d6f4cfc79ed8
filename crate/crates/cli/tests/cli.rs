use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn tardy(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tardy"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn full_workflow() {
    let dir = tempfile::tempdir().unwrap();
    let inst_dir = dir.path().join("instances");
    let out = tardy(&["generate", "--family", "11", "--n", "30", "--seed", "4", "--count", "6", "--out", p(&inst_dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read_dir(&inst_dir).unwrap().count(), 6);

    let data = dir.path().join("train.csv");
    let out = tardy(&["label", "--in", p(&inst_dir), "--time-limit", "30", "--out", p(&data)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&data).unwrap();
    assert_eq!(text.lines().count(), 1 + 6 * 30);
    assert!(text.starts_with("w_dev,"));

    let model = dir.path().join("model.json");
    let out = tardy(&["train", "--data", p(&data), "--seed", "1", "--epochs", "2", "--lr", "0.001", "--out", p(&model)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 3);

    let instance = inst_dir.join("f11_n30_s4.txt");
    let out = tardy(&["schedule", "--instance", p(&instance), "--model", p(&model), "--alpha", "0.5", "--gamma", "10", "--beta", "5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.starts_with("objective "));
    assert!(stdout.contains("\nrefine optimal\n"));

    let bench = dir.path().join("bench");
    let out = tardy(&[
        "bench", "--families", "1,13", "--sizes", "15", "--methods", "proposed,rule_based,ga",
        "--count", "2", "--seed", "3", "--timeout", "30", "--model", p(&model),
        "--ga-generations", "5", "--out", p(&bench),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let records = fs::read_to_string(bench.join("records.csv")).unwrap();
    assert_eq!(records.lines().count(), 1 + 2 * 2 * 3);
    assert!(fs::read_to_string(bench.join("summary.md")).unwrap().contains("Δ_avg"));

    let calib = dir.path().join("calibration.csv");
    let out = tardy(&["calibrate", "--model", p(&model), "--data", p(&data), "--out", p(&calib)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read_to_string(&calib).unwrap().lines().count(), 21);
}

#[test]
fn exit_codes() {
    assert_eq!(tardy(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(tardy(&["generate", "--family", "1"]).status.code(), Some(1));
    assert_eq!(tardy(&["--help"]).status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let out = tardy(&["generate", "--family", "16", "--n", "5", "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(1));

    // feasible as a file, but two jobs cannot both meet deadline 4
    let inst = dir.path().join("bad.txt");
    fs::write(
        &inst,
        "tardy-instance version=1 family=0 seed=0 n=2\nid,w,p,d,dd\n0,1,3,3,4\n1,1,3,3,4\n",
    )
    .unwrap();
    let data = dir.path().join("d.csv");
    let out = tardy(&["label", "--in", p(dir.path()), "--out", p(&data)]);
    assert!(out.status.success());
    let model_dir = tempfile::tempdir().unwrap();
    let gen = tardy(&["generate", "--family", "1", "--n", "20", "--count", "3", "--out", p(model_dir.path())]);
    assert!(gen.status.success());
    let train_data = model_dir.path().join("t.csv");
    assert!(tardy(&["label", "--in", p(model_dir.path()), "--out", p(&train_data)]).status.success());
    let model = model_dir.path().join("m.json");
    assert!(tardy(&["train", "--data", p(&train_data), "--epochs", "1", "--out", p(&model)]).status.success());
    let out = tardy(&["schedule", "--instance", p(&inst), "--model", p(&model)]);
    assert_eq!(out.status.code(), Some(2));

    let broken = dir.path().join("broken.txt");
    fs::write(&broken, "tardy-instance version=1 family=0 seed=0 n=1\nid,w,p,d,dd\n0,1,5,3,4\n").unwrap();
    let out = tardy(&["schedule", "--instance", p(&broken), "--model", p(&model)]);
    assert_eq!(out.status.code(), Some(2));
    let out = tardy(&["schedule", "--instance", p(&inst), "--model", p(&model), "--alpha", "2"]);
    assert_eq!(out.status.code(), Some(1));
}
