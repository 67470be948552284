use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

use nci::embedding::{save_embedding, SpectralFactor};
use nci::graph::save_graph;
use nci::relations::{compute_similarity, RelationKind, RelationSpec};
use nci::synthetic::desk_graph;

fn nci(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nci")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, cfg: Value) -> PathBuf {
    let p = dir.join("run.json");
    fs::write(&p, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    p
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn path_graph(dir: &Path) -> PathBuf {
    fs::write(dir.join("path.txt"), "a b\nb c\n").unwrap();
    write_config(dir, json!({"seed": 0, "graph": {"edges": "path.txt"}, "out_dir": "out"}))
}

/// Desk graph written to disk, so embeddings can be loaded by node id.
fn desk_files(dir: &Path) {
    let g = desk_graph(0);
    save_graph(
        &g,
        &dir.join("edges.txt"),
        Some(&dir.join("attr.csv")),
        Some(&dir.join("labels.csv")),
    )
    .unwrap();
}

fn desk_graph_config() -> Value {
    json!({"edges": "edges.txt", "attributes": "attr.csv", "labels": "labels.csv"})
}

#[test]
fn relations_on_path_then_warm_cache() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = path_graph(dir.path());
    let cfg = cfg.to_str().unwrap();

    let first = nci(&["relations", "--config", cfg, "--relations", "Link,SPD"]);
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));
    let text = stdout(&first);
    let spd = text.lines().find(|l| l.starts_with("SPD")).unwrap();
    assert!(spd.contains("range [0.5000, 1.0000]"), "{spd}");
    assert!(!text.contains("(cached)"));
    let files: Vec<_> = fs::read_dir(dir.path().join("out/cache")).unwrap().collect();
    assert_eq!(files.len(), 2);

    let second = nci(&["relations", "--config", cfg, "--relations", "Link,SPD"]);
    assert_eq!(second.status.code(), Some(0));
    assert_eq!(stdout(&second).matches("(cached)").count(), 2);
    let summary = read_json(&dir.path().join("out/relations.json"));
    assert!(summary["relations"].as_array().unwrap().iter().all(|r| r["cache_hit"] == true));
}

#[test]
fn attribute_relation_without_attributes_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = path_graph(dir.path());
    let o = nci(&["relations", "--config", cfg.to_str().unwrap(), "--relations", "Attr"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Attr"), "{}", stderr(&o));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let no_seed = write_config(dir.path(), json!({"graph": {"edges": "x.txt"}, "out_dir": "o"}));
    assert_eq!(nci(&["relations", "--config", no_seed.to_str().unwrap()]).status.code(), Some(2));
    let cfg = path_graph(dir.path());
    let o = nci(&["evaluate-method", "--config", cfg.to_str().unwrap(), "--methods", "nope"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(nci(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn evaluate_method_full_rank_is_perfect_and_tables_have_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        json!({"seed": 0, "graph": {"synthetic": {}}, "out_dir": "out",
               "relations": [{"kind": "Link"}, {"kind": "SPD"}, {"kind": "PageRank"}]}),
    );
    let cfg = cfg.to_str().unwrap();
    let o = nci(&["evaluate-method", "--config", cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = read_json(&dir.path().join("out/evaluate_method.json"));
    assert_eq!(out["table"].as_array().unwrap().len(), 1);
    assert_eq!(out["table"][0]["mrr"], 1.0);
    assert_eq!(out["table"][0]["d"], 200);

    let o = nci(&["evaluate-method", "--config", cfg, "--methods", "NCI,KendallTau,PropertyClass", "--dims", "10,200"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = read_json(&dir.path().join("out/evaluate_method.json"));
    let rows = out["table"].as_array().unwrap();
    assert_eq!(rows.len(), 6);
    let csv = fs::read_to_string(dir.path().join("out/mrr_table.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);
    for m in ["NCI", "KendallTau", "PropertyClass"] {
        assert_eq!(rows.iter().filter(|r| r["method"] == m).count(), 2);
    }
}

#[test]
fn interpret_ranks_spd_first_for_its_own_embedding_and_nothing_for_a_shuffle() {
    let dir = tempfile::tempdir().unwrap();
    desk_files(dir.path());
    let g = desk_graph(0);
    let spd = compute_similarity(&g, &RelationSpec::new(RelationKind::Spd)).unwrap();
    let z = SpectralFactor::from_similarity(&spd).unwrap().embedding(200).unwrap();
    save_embedding(&z.shuffle(3), &g, &dir.path().join("shuffled.csv")).unwrap();
    let cfg = write_config(
        dir.path(),
        json!({"seed": 0, "graph": desk_graph_config(), "out_dir": "out",
               "params": {"n_null_shuffles": 20},
               "embeddings": [
                   {"name": "spd", "evd": {"relation": "SPD", "d": 200}},
                   {"name": "shuffled", "path": "shuffled.csv"}]}),
    );
    let o = nci(&["interpret", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let spd_report = read_json(&dir.path().join("out/interpret_spd.json"));
    let rels = spd_report["relations"].as_array().unwrap();
    let best = rels
        .iter()
        .max_by(|a, b| a["coherence_rate"].as_f64().unwrap().total_cmp(&b["coherence_rate"].as_f64().unwrap()))
        .unwrap();
    assert_eq!(best["name"], "SPD");
    assert_eq!(best["significant"], true);
    assert!(spd_report["clamped_fraction"].is_number());

    let shuffled = read_json(&dir.path().join("out/interpret_shuffled.json"));
    for r in shuffled["relations"].as_array().unwrap() {
        assert_eq!(r["significant"], false, "{}", r["name"]);
    }

    let summary = read_json(&dir.path().join("out/interpret_summary.json"));
    let scores: Vec<f64> = summary["models"]
        .as_array()
        .unwrap()
        .iter()
        .map(|m| m["model_coherence_score"].as_f64().unwrap())
        .collect();
    assert_eq!(summary["models"][0]["model"], "spd");
    assert!(scores.windows(2).all(|w| w[0] >= w[1]));
    assert!(summary["random"]["rates"].is_object());
}

#[test]
fn interpret_rejects_embedding_for_another_graph() {
    let dir = tempfile::tempdir().unwrap();
    desk_files(dir.path());
    fs::write(dir.path().join("bad.csv"), "node,e1\nzz,1.0\n").unwrap();
    let cfg = write_config(
        dir.path(),
        json!({"seed": 0, "graph": desk_graph_config(), "out_dir": "out",
               "embeddings": [{"name": "bad", "path": "bad.csv"}]}),
    );
    assert_eq!(nci(&["interpret", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn interpret_outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        json!({"seed": 4, "graph": {"synthetic": {"nodes": 80}}, "out_dir": "out",
               "params": {"n_null_shuffles": 10},
               "methods": ["NCI", "KendallTau"],
               "embeddings": [{"name": "rp", "demo_rp": {"d": 8}}]}),
    );
    let cfg = cfg.to_str().unwrap();
    let out = |d: &str| dir.path().join(d).to_str().unwrap().to_string();
    let read = |d: &str| fs::read(dir.path().join(d).join("interpret_rp.json")).unwrap();
    assert_eq!(nci(&["interpret", "--config", cfg, "--out-dir", &out("a")]).status.code(), Some(0));
    assert_eq!(nci(&["interpret", "--config", cfg, "--out-dir", &out("b")]).status.code(), Some(0));
    assert_eq!(read("a"), read("b"));
    assert!(dir.path().join("a/interpret.run.json").exists());
    let o = nci(&["interpret", "--config", cfg, "--out-dir", &out("c"), "--seed", "5"]);
    assert_eq!(o.status.code(), Some(0));
    assert_ne!(read("a"), read("c"));
}

/// Writes minimal interpretation reports for `correlate` to read.
fn fake_reports(out: &Path, models: &[(&str, f64, f64)]) {
    fs::create_dir_all(out).unwrap();
    for (name, omega, link) in models {
        let report = json!({
            "model_coherence_score": omega,
            "relations": [{"name": "Link", "coherence_rate": link}]
        });
        fs::write(out.join(format!("interpret_{name}.json")), report.to_string()).unwrap();
    }
}

fn pearson_oracle(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (sx, sy) = (x.iter().sum::<f64>(), y.iter().sum::<f64>());
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

fn correlate(dir: &Path, metrics: &str) -> Output {
    fs::write(dir.join("metrics.csv"), metrics).unwrap();
    let cfg = path_graph(dir);
    nci(&["correlate", "--config", cfg.to_str().unwrap(), "--metrics", dir.join("metrics.csv").to_str().unwrap()])
}

#[test]
fn correlate_proportional_metrics_gives_one() {
    let dir = tempfile::tempdir().unwrap();
    let models = [("m1", 0.1, 0.3), ("m2", 0.25, 0.2), ("m3", 0.4, 0.9), ("m4", 0.5, 0.5), ("m5", 0.8, 0.1)];
    fake_reports(&dir.path().join("out"), &models);
    let mut metrics = "model,task,metric\n".to_string();
    for (m, omega, _) in models {
        metrics += &format!("{m},cls,{}\n", 3.0 * omega);
    }
    let o = correlate(dir.path(), &metrics);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = read_json(&dir.path().join("out/correlation.json"));
    assert!((out["tasks"][0]["model_coherence_score"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn correlate_matches_hand_computed_pearson() {
    let dir = tempfile::tempdir().unwrap();
    fake_reports(&dir.path().join("out"), &[("a", 0.2, 0.7), ("b", 0.5, 0.1), ("c", 0.9, 0.4)]);
    let o = correlate(dir.path(), "model,task,metric\na,t,1.0\nb,t,3.0\nc,t,2.0\n");
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = read_json(&dir.path().join("out/correlation.json"));
    let task = &out["tasks"][0];
    let omega = pearson_oracle(&[0.2, 0.5, 0.9], &[1.0, 3.0, 2.0]);
    let link = pearson_oracle(&[0.7, 0.1, 0.4], &[1.0, 3.0, 2.0]);
    assert!((task["model_coherence_score"].as_f64().unwrap() - omega).abs() < 1e-12);
    assert!((task["relations"]["Link"].as_f64().unwrap() - link).abs() < 1e-12);
}

#[test]
fn correlate_errors() {
    let dir = tempfile::tempdir().unwrap();
    fake_reports(&dir.path().join("out"), &[("a", 0.2, 0.7), ("b", 0.5, 0.1)]);
    let constant = correlate(dir.path(), "model,task,metric\na,t,1.0\nb,t,1.0\n");
    assert_eq!(constant.status.code(), Some(2));
    assert!(stderr(&constant).contains("correlation undefined"), "{}", stderr(&constant));
    let single = correlate(dir.path(), "model,task,metric\na,t,1.0\n");
    assert!(stderr(&single).contains("correlation undefined"));
    let unknown = correlate(dir.path(), "model,task,metric\na,t,1.0\nghost,t,2.0\n");
    assert_eq!(unknown.status.code(), Some(2));
    assert!(stderr(&unknown).contains("ghost"));
}
