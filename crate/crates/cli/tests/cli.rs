use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn honor(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_honor")).args(args).output().unwrap()
}

fn records(out: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap_or_else(|e| panic!("not JSON: {l:?}: {e}")))
        .collect()
}

fn last_record(out: &Output) -> Value {
    records(out).pop().expect("at least one record")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const LABELED: &str = r#"{"num_nodes": 4, "hyperedges": [[0, 1, 2], [2, 3]], "labels": [0, 0, 1, 1]}"#;

#[test]
fn metrics_reports_both_scores() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "g.json", LABELED);
    let out = honor(&["metrics", "--data", &data]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = last_record(&out);
    // Edge {0,1,2} has labels 0,0,1: entropy h(1/3) over log 2, and 2 mixed
    // pairs against 6 ordered ones. Edge {2,3} is pure.
    let h = -(1.0 / 3.0) * (1.0f64 / 3.0).log2() - (2.0 / 3.0) * (2.0f64 / 3.0).log2();
    assert!((r["label_entropy"].as_f64().unwrap() - h / 2.0).abs() < 1e-12);
    assert!((r["pairwise_ratio"].as_f64().unwrap() - (2.0 / 6.0) / 2.0).abs() < 1e-12);
}

#[test]
fn metrics_reads_edgelists() {
    let dir = tempfile::tempdir().unwrap();
    let edges = write(dir.path(), "g.txt", "# edges\n0 1 2\n2 3\n");
    let labels = write(dir.path(), "labels.txt", "0\n0\n1\n1\n");
    let out = honor(&["metrics", "--data", &edges, "--num-nodes", "4", "--labels", &labels]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json_out = honor(&["metrics", "--data", &write(dir.path(), "g.json", LABELED)]);
    assert_eq!(last_record(&out)["label_entropy"], last_record(&json_out)["label_entropy"]);
}

#[test]
fn missing_labels_fail() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "g.json", r#"{"num_nodes": 2, "hyperedges": [[0, 1]]}"#);
    let out = honor(&["metrics", "--data", &data]);
    assert!(!out.status.success());
    let err: Value = serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).unwrap();
    assert_eq!(err["event"], "error");
}

#[test]
fn bad_inputs_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    assert!(!honor(&["metrics", "--data", "/nonexistent.json"]).status.success());
    assert!(!honor(&["metrics", "--data", "x.json", "--bogus"]).status.success());
    let cfg = write(dir.path(), "c.json", r#"{"train": {"epoch": 3}}"#);
    let out = dir.path().join("o");
    let out = honor(&["hsbm", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(!out.status.success());
}

fn generate(dir: &Path) -> String {
    let out = dir.join("gen");
    let r = honor(&["hsbm", "--nodes", "30", "--edges", "30", "--seed", "4", "--out", out.to_str().unwrap()]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    out.join("hypergraph.json").to_str().unwrap().to_string()
}

#[test]
fn training_twice_gives_identical_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate(dir.path());
    let before = std::fs::read(&data).unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"train": {"epochs": 15, "hidden_dim": 8}}"#);
    let mut digests = Vec::new();
    for run in ["run1", "run2"] {
        let out = dir.path().join(run);
        let r = honor(&["train", "--data", &data, "--config", &cfg, "--seed", "7", "--out", out.to_str().unwrap()]);
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
        let recs = records(&r);
        assert!(recs.iter().any(|v| v["event"] == "epoch"));
        assert_eq!(recs.last().unwrap()["event"], "done");
        let emb = std::fs::read(out.join("embeddings.csv")).unwrap();
        let loss = std::fs::read(out.join("loss_history.csv")).unwrap();
        let manifest: Value = serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest["seed"], 7);
        assert_eq!(manifest["config"]["epochs"], 15);
        assert_eq!(manifest["config"]["hidden_dim"], 8);
        assert_eq!(manifest["data_checksum"].as_str().unwrap().len(), 64);
        digests.push((emb, loss, manifest["data_checksum"].clone()));
    }
    assert_eq!(digests[0], digests[1]);
    assert_eq!(std::fs::read(&data).unwrap(), before, "input file changed");
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate(dir.path());
    let cfg = write(dir.path(), "c.json", r#"{"train": {"epochs": 50, "hidden_dim": 8, "tau": 0.9}}"#);
    let out = dir.path().join("run");
    let r = honor(&["train", "--data", &data, "--config", &cfg, "--epochs", "3", "--out", out.to_str().unwrap()]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let manifest: Value = serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["epochs"], 3);
    assert_eq!(manifest["config"]["tau"], 0.9);
    let lines = std::fs::read_to_string(out.join("loss_history.csv")).unwrap().lines().count();
    assert_eq!(lines, 4);
}

#[test]
fn eval_scores_trained_embeddings() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate(dir.path());
    let run = dir.path().join("run");
    let r = honor(&["train", "--data", &data, "--epochs", "5", "--hidden-dim", "8", "--out", run.to_str().unwrap()]);
    assert!(r.status.success());
    let emb = run.join("embeddings.csv");
    let out = dir.path().join("eval");
    let r = honor(&[
        "eval",
        "--data",
        &data,
        "--embeddings",
        emb.to_str().unwrap(),
        "--splits",
        "3",
        "--runs",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let rec = last_record(&r);
    let acc = rec["accuracy_mean"].as_f64().unwrap();
    assert!((0.0..=100.0).contains(&acc));
    assert!(rec["ari_mean"].is_number());
    assert!(out.join("eval.json").exists() && out.join("manifest.json").exists());
}

#[test]
fn gradcheck_passes() {
    let r = honor(&["gradcheck"]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let rec = last_record(&r);
    assert!(rec["max_relative_error"].as_f64().unwrap() < 1e-4);
    assert_eq!(rec["passed"], true);
    assert!(honor(&["gradcheck", "--untie-views", "--activation", "identity"]).status.success());
}

#[test]
fn verify_writes_tables_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"lab": {"train": {"hidden_dim": 8}, "classify": {"splits": 2},
            "separation_nodes": 30, "scaling_sizes": [20, 30], "scaling_train_nodes": 20,
            "information_nodes": 30, "similarity_nodes": 30}}"#,
    );
    let out = dir.path().join("verify");
    let r = honor(&["hsbm-verify", "--config", &cfg, "--seeds", "2", "--epochs", "3", "--out", out.to_str().unwrap()]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    for f in [
        "separation.csv",
        "separation.svg",
        "eigvec.csv",
        "eigvec_error.svg",
        "information.csv",
        "similarity.csv",
        "summary.json",
        "manifest.json",
    ] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let svg = std::fs::read_to_string(out.join("separation.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    let manifest: Value = serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["seeds"], serde_json::json!([0, 1]));
    assert_eq!(manifest["config"]["train"]["epochs"], 3);
}
