use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn dynlp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dynlp"))
        .args(args)
        .env("DYNLP_LOG", "error")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = dynlp(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn generate(dir: &Path, n: &str) {
    ok(&[
        "generate", "--model", "er", "--n", n, "--avg-degree", "5", "--seed", "7", "--labeled", "0.02",
        "--output-dir", s(dir),
    ]);
}

#[test]
fn generate_writes_four_files_deterministically() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    generate(a.path(), "1000");
    generate(b.path(), "1000");
    for f in ["graph.txt", "ground_truth.csv", "batches.jsonl", "config.json"] {
        let x = fs::read(a.path().join(f)).unwrap();
        assert!(!x.is_empty(), "{f} is empty");
        assert_eq!(x, fs::read(b.path().join(f)).unwrap(), "{f} differs");
    }
    let header = fs::read_to_string(a.path().join("graph.txt")).unwrap();
    assert!(header.starts_with("1000 "));
}

#[test]
fn missing_n_is_a_usage_error() {
    let out = dynlp(&["generate", "--model", "er"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn knn_from_features() {
    let dir = TempDir::new().unwrap();
    let mut csv = String::from("id,label,f0,f1\n");
    for i in 0..60 {
        let (x, y, l) = if i % 2 == 0 { (1.0, 0.05 * i as f64, 0) } else { (0.05 * i as f64, 1.0, 1) };
        csv.push_str(&format!("{i},{l},{x},{y}\n"));
    }
    let f = dir.path().join("f.csv");
    fs::write(&f, csv).unwrap();
    ok(&[
        "generate", "--model", "knn", "--features", s(&f), "--k", "5", "--labeled", "0.1", "--batch-size", "10",
        "--fractions", "0.9:0.1:0.0", "--output-dir", s(dir.path()),
    ]);
    let graph = fs::read_to_string(dir.path().join("graph.txt")).unwrap();
    let mut lines = graph.lines();
    let header: Vec<usize> = lines.next().unwrap().split_whitespace().map(|x| x.parse().unwrap()).collect();
    assert_eq!(header[0], 60);
    // every vertex keeps its k best, so at least n*k/2 distinct edges survive
    assert!(header[1] >= 150, "{header:?}");
}

#[test]
fn run_echoes_delta_and_config_reruns_identically() {
    let g = TempDir::new().unwrap();
    generate(g.path(), "2000");
    let batches = g.path().join("batches.jsonl");
    let r1 = TempDir::new().unwrap();
    ok(&[
        "run", "--method", "dynlp", "--delta", "1e-4", "--tau", "auto", "--batches", s(&batches), "--snapshots",
        "--output-dir", s(r1.path()),
    ]);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(r1.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["config_echo"]["engine"]["delta"].as_f64(), Some(0.0001));
    assert!(r1.path().join("labels_t1.csv").exists());

    let r2 = TempDir::new().unwrap();
    ok(&["run", "--config", s(&r1.path().join("config.json")), "--output-dir", s(r2.path())]);
    assert_eq!(
        fs::read(r1.path().join("labels.csv")).unwrap(),
        fs::read(r2.path().join("labels.csv")).unwrap()
    );
}

#[test]
fn thread_count_does_not_change_labels() {
    let g = TempDir::new().unwrap();
    generate(g.path(), "3000");
    let batches = g.path().join("batches.jsonl");
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        for method in ["itlp", "dynlp"] {
            let r = TempDir::new().unwrap();
            ok(&[
                "--threads", threads, "run", "--method", method, "--batches", s(&batches), "--output-dir", s(r.path()),
            ]);
            outputs.push((method, fs::read(r.path().join("labels.csv")).unwrap()));
        }
    }
    assert_eq!(outputs[0], outputs[2]);
    assert_eq!(outputs[1], outputs[3]);
}

#[test]
fn run_from_graph_and_ground_truth() {
    let g = TempDir::new().unwrap();
    generate(g.path(), "500");
    let r = TempDir::new().unwrap();
    ok(&[
        "run", "--method", "stlp", "--graph", s(&g.path().join("graph.txt")), "--ground-truth",
        s(&g.path().join("ground_truth.csv")), "--output-dir", s(r.path()),
    ]);
    let labels = fs::read_to_string(r.path().join("labels.csv")).unwrap();
    assert_eq!(labels.lines().count(), 501);
}

#[test]
fn oracle_refuses_large_graphs() {
    let g = TempDir::new().unwrap();
    generate(g.path(), "7000");
    let out = dynlp(&["run", "--method", "oracle", "--batches", s(&g.path().join("batches.jsonl")), "--output-dir", s(g.path())]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cap"));
}

#[test]
fn compare_writes_speedups_and_accuracy() {
    let g = TempDir::new().unwrap();
    generate(g.path(), "1500");
    let batches = g.path().join("batches.jsonl");
    let c = TempDir::new().unwrap();
    ok(&[
        "compare", "--methods", "dynlp,itlp", "--reference", "stlp", "--batches", s(&batches), "--output-dir",
        s(c.path()),
    ]);
    let speedups = fs::read_to_string(c.path().join("speedups.csv")).unwrap();
    assert!(speedups.starts_with("batch,method,relative_to,speedup"));
    assert!(speedups.lines().any(|l| l.contains(",dynlp,itlp,")));
    let runs = fs::read_to_string(c.path().join("runs.csv")).unwrap();
    assert!(runs.starts_with("method,batch,iterations,updates,wall_time_ms"));
    assert!(!runs.contains("stlp"), "reference-only method leaked into runs.csv");
    let acc = fs::read_to_string(c.path().join("accuracy.csv")).unwrap();
    let row = acc.lines().find(|l| l.starts_with("dynlp,stlp,")).expect("accuracy row");
    let agreement: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
    assert!(agreement > 0.9, "{row}");
    assert!(c.path().join("comparison.json").exists());
}

#[test]
fn unknown_method_lists_valid_ones() {
    let out = dynlp(&["compare", "--methods", "dynlp,bogus", "--batches", "x.jsonl"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    for m in ["dynlp", "itlp", "stlp", "oracle"] {
        assert!(err.contains(m), "{err}");
    }
}

#[test]
fn exit_codes_for_bad_inputs() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("missing.jsonl");
    let out = dynlp(&["run", "--method", "dynlp", "--batches", s(&missing), "--output-dir", s(dir.path())]);
    assert_eq!(out.status.code(), Some(4));

    let bad_graph = dir.path().join("g.txt");
    fs::write(&bad_graph, "3 1\n0 7 1.0\n").unwrap();
    let gt = dir.path().join("gt.csv");
    fs::write(&gt, "vertex,class\n0,1\n").unwrap();
    let out = dynlp(&["run", "--method", "dynlp", "--graph", s(&bad_graph), "--ground-truth", s(&gt), "--output-dir", s(dir.path())]);
    assert_eq!(out.status.code(), Some(3));

    let out = dynlp(&["run", "--method", "dynlp", "--delta=-1", "--graph", s(&bad_graph), "--ground-truth", s(&gt)]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn components_dump() {
    let g = TempDir::new().unwrap();
    generate(g.path(), "1000");
    ok(&[
        "components", "--batches", s(&g.path().join("batches.jsonl")), "--batch", "1", "--output-dir", s(g.path()),
    ]);
    let csv = fs::read_to_string(g.path().join("components.csv")).unwrap();
    assert!(csv.starts_with("vertex,component"));
    assert!(csv.lines().count() > 50);
}
