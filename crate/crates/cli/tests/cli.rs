use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn gapscope(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gapscope")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn gen_metric_and_spectrum_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("c6.txt");
    let matrix = dir.path().join("c6.csv");
    let g = json(&gapscope(&["gen", "--family", "cycle", "--n", "6", "--out", p(&edges), "--matrix-out", p(&matrix)]));
    assert_eq!(g["n"], 6);
    assert!((g["lambda2"].as_f64().unwrap() - 0.5).abs() < 1e-9);

    let s = json(&gapscope(&["spectrum", "--matrix", p(&matrix), "--full"]));
    assert_eq!(s["eigenvalues"].as_array().unwrap().len(), 6);
    assert!((s["gap"].as_f64().unwrap() - 0.5).abs() < 1e-9);

    let metric = dir.path().join("d.csv");
    let m = json(&gapscope(&["metric", "--graph", p(&edges), "--out", p(&metric)]));
    assert_eq!(m["diameter"], 3.0);
    assert!(fs::read_to_string(&metric).unwrap().lines().count() == 6);
}

#[test]
fn gen_random_regular_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    for out in [&a, &b] {
        json(&gapscope(&["gen", "--family", "random-regular", "--n", "30", "--k", "3", "--seed", "9", "--out", p(out)]));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let missing = gapscope(&["gen", "--family", "random-regular", "--n", "30", "--out", p(&a)]);
    assert!(!missing.status.success());
}

#[test]
fn norms_poincare_bound_and_embed() {
    let dir = tempfile::tempdir().unwrap();
    let space = dir.path().join("linf2.json");
    fs::write(&space, r#"{"kind": "lp", "dim": 2, "p": "inf"}"#).unwrap();
    let h = json(&gapscope(&["norms", "--space", p(&space), "--op", "hilbert-distance"]));
    assert!((h["upper"].as_f64().unwrap() - 2f64.sqrt()).abs() < 1e-12);
    let s = json(&gapscope(&["norms", "--space", p(&space), "--op", "smoothness", "--p", "2", "--seed", "1"]));
    assert!(s["s_lower"].as_f64().unwrap() >= 3f64.sqrt() - 1e-6);

    let edges = dir.path().join("c4.txt");
    let matrix = dir.path().join("c4.csv");
    json(&gapscope(&["gen", "--family", "cycle", "--n", "4", "--out", p(&edges), "--matrix-out", p(&matrix)]));
    let line = dir.path().join("line.json");
    fs::write(&line, r#"{"kind": "lp", "dim": 1, "p": 2}"#).unwrap();
    let points = dir.path().join("pts.csv");
    fs::write(&points, "1\n0\n-1\n0\n").unwrap();
    let r = json(&gapscope(&["poincare", "--matrix", p(&matrix), "--space", p(&line), "--p", "2", "--points", p(&points)]));
    assert!((r["ratio"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    let best = dir.path().join("best.csv");
    let r = json(&gapscope(&[
        "poincare", "--matrix", p(&matrix), "--space", p(&line), "--p", "2", "--maximize", "--seed", "2", "--restarts", "3",
        "--steps", "200", "--out", p(&best),
    ]));
    assert!((r["report"]["ratio"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert!(best.exists());

    let inputs = dir.path().join("in.json");
    fs::write(&inputs, r#"{"lambda2": 0.5, "d_x": 1.0}"#).unwrap();
    let b = json(&gapscope(&["bound", "--name", "hilbert-gamma", "--inputs", p(&inputs), "--constant", "2"]));
    assert_eq!(b["value"], 4.0);
    assert_eq!(b["case_taken"], "case1");

    let metric = dir.path().join("d.csv");
    json(&gapscope(&["metric", "--graph", p(&edges), "--out", p(&metric)]));
    let plane = dir.path().join("plane.json");
    fs::write(&plane, r#"{"kind": "lp", "dim": 2, "p": 2}"#).unwrap();
    let image = dir.path().join("image.csv");
    let e = json(&gapscope(&[
        "embed", "--metric", p(&metric), "--space", p(&plane), "--objective", "distortion", "--seed", "0", "--out", p(&image),
    ]));
    assert!((e["distortion"].as_f64().unwrap() - 2f64.sqrt()).abs() < 1e-3);
    assert_eq!(fs::read_to_string(&image).unwrap().lines().count(), 4);
}

#[test]
fn invalid_inputs_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "0.5,0.6\n0.5,0.4\n").unwrap();
    let out = gapscope(&["spectrum", "--matrix", p(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("exp.toml");
    fs::write(&path, body).unwrap();
    path
}

#[test]
fn run_writes_deterministic_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
        pipeline = "verify-line-gamma"
        seed = 1
        output_dir = "out"
        [[graphs]]
        family = "cycle"
        n = 5
        [[graphs]]
        family = "random_regular"
        n = 12
        k = 3
        count = 2
        [optimizer]
        restarts = 3
        steps = 300
        "#,
    );
    let first = json(&gapscope(&["run", "--config", p(&cfg), "--jobs", "1"]));
    assert_eq!(first["instances"], 3);
    assert_eq!(first["failures"], 0);
    let out = dir.path().join("out");
    let rows = fs::read_to_string(out.join("rows.jsonl")).unwrap();
    let plot = fs::read_to_string(out.join("plot.csv")).unwrap();
    let summary: Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["spot_check"]["passed"], true);
    assert_eq!(rows.lines().count(), 3);
    assert!(plot.starts_with("instance,label,n,lambda2"));

    json(&gapscope(&["run", "--config", p(&cfg), "--jobs", "2"]));
    assert_eq!(fs::read_to_string(out.join("rows.jsonl")).unwrap(), rows);
    assert_eq!(fs::read_to_string(out.join("plot.csv")).unwrap(), plot);

    json(&gapscope(&["run", "--config", p(&cfg), "--seed", "2"]));
    assert_ne!(fs::read_to_string(out.join("rows.jsonl")).unwrap(), rows);
}

#[test]
fn run_exit_code_reflects_instance_failures() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
        pipeline = "bound-sweep"
        output_dir = "out"
        [bound]
        name = "dx"
        grid = { n = [16], lambda2 = [0.5, 1.0], ratio = [3.0] }
        "#,
    );
    let out = gapscope(&["run", "--config", p(&cfg)]);
    assert_eq!(out.status.code(), Some(1));
    let rows = fs::read_to_string(dir.path().join("out/rows.jsonl")).unwrap();
    assert!(rows.lines().nth(1).unwrap().contains("\"status\":\"failed\""));
    assert!(String::from_utf8_lossy(&out.stderr).contains("failed"));
}

#[test]
fn run_rejects_invalid_configs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "pipeline = \"matousek-profile\"\n[[graphs]]\nfamily = \"cycle\"\nn = 8\n");
    assert_eq!(gapscope(&["run", "--config", p(&cfg)]).status.code(), Some(2));
    let cfg = write_config(dir.path(), "pipeline = \"verify-line-gamma\"\nseed = 1\n[[graphs]]\nfamily = \"file\"\npath = \"nope.txt\"\n");
    let out = gapscope(&["run", "--config", p(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.txt"));
}
