//! End-to-end run through the command layer: writes the desk graph to disk,
//! a JSON run config, then runs relations, interpret, evaluate-method and
//! correlate. Outputs land in a temporary directory printed at the end.

use std::fs;

use nci::cli::{cmd_correlate, cmd_evaluate_method, cmd_interpret, cmd_relations, RunConfig};
use nci::graph::save_graph;
use nci::synthetic::desk_graph;

fn main() -> nci::Result<()> {
    let dir = std::env::temp_dir().join("nci-pipeline-example");
    fs::create_dir_all(&dir).map_err(|e| nci::Error::Config(e.to_string()))?;
    let g = desk_graph(0);
    save_graph(
        &g,
        &dir.join("edges.txt"),
        Some(&dir.join("attributes.csv")),
        Some(&dir.join("labels.csv")),
    )?;
    let config = r#"{
  "seed": 0,
  "graph": {"edges": "edges.txt", "attributes": "attributes.csv", "labels": "labels.csv"},
  "embeddings": [
    {"name": "evd_spd", "evd": {"relation": "SPD", "d": 32}},
    {"name": "evd_label", "evd": {"relation": "1-Label", "d": 32}},
    {"name": "rp", "demo_rp": {"d": 32}}
  ],
  "relations": [
    {"kind": "Link"}, {"kind": "SPD"}, {"kind": "PageRank"},
    {"kind": "LabelDist", "k": 1}, {"kind": "Attr"}
  ],
  "methods": ["NCI", "KendallTau"],
  "dims": [10, 200],
  "params": {"n_null_shuffles": 20},
  "metrics": "metrics.csv",
  "out_dir": "out"
}
"#;
    let cfg_path = dir.join("run.json");
    fs::write(&cfg_path, config).map_err(|e| nci::Error::Config(e.to_string()))?;
    // downstream metrics for three made-up models
    fs::write(
        dir.join("metrics.csv"),
        "model,task,metric\nevd_spd,link,0.81\nevd_label,link,0.62\nrp,link,0.70\n\
         evd_spd,node,0.55\nevd_label,node,0.91\nrp,node,0.60\n",
    )
    .map_err(|e| nci::Error::Config(e.to_string()))?;

    let cfg = RunConfig::load(&cfg_path, &Default::default())?;
    for r in cmd_relations(&cfg)?.relations {
        println!("relation {:8} [{:.3}, {:.3}]", r.name, r.min_off_diagonal, r.max_off_diagonal);
    }
    let interp = cmd_interpret(&cfg)?;
    for m in &interp.models {
        println!("model {:10} score {:.4}", m.model, m.model_coherence_score.unwrap_or(f64::NAN));
    }
    for r in cmd_evaluate_method(&cfg)?.table {
        println!("{:10} d = {:3}  MRR {:.3}", r.method.as_str(), r.d, r.mrr);
    }
    for t in cmd_correlate(&cfg)?.tasks {
        println!("task {:5} Pearson r = {:.3}", t.task, t.model_coherence_score);
    }
    println!("outputs in {}", cfg.out_dir.display());
    Ok(())
}
