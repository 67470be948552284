//! Coherence report for two embeddings of the desk graph: the EVD embedding of
//! shortest-path similarity and a random-projection embedding. A shuffled copy
//! shows what capturing nothing looks like.

use nci::embedding::{demo_rp_embedding, EmbeddingMatrix, SpectralFactor};
use nci::nci::{interpret, CoherenceParams, CoherenceReport};
use nci::relations::{compute_similarity, RelationKind, RelationSpec, SimilarityMatrix};
use nci::synthetic::desk_graph;

fn show(r: &CoherenceReport) {
    println!("{}  (model coherence score {:.4})", r.model, r.model_coherence_score);
    for c in &r.relations {
        println!(
            "  {:8} clustering {:>6} / {:.3}  smoothness {:>6} / {:>6}  rate {:.3}{}",
            c.name,
            fmt(c.clustering_rate),
            c.clustering_bound,
            fmt(c.smoothness_rate),
            fmt(c.smoothness_bound),
            c.coherence_rate,
            if c.significant { "  *" } else { "" }
        );
    }
}

fn fmt(x: Option<f64>) -> String {
    x.map_or("-".into(), |x| format!("{x:.3}"))
}

fn main() -> nci::Result<()> {
    let g = desk_graph(0);
    let sims: Vec<SimilarityMatrix> = RelationSpec::computable_on(&g)
        .iter()
        .map(|s| compute_similarity(&g, s))
        .collect::<nci::Result<_>>()?;
    let spd = sims.iter().find(|s| s.spec().kind == RelationKind::Spd).unwrap();
    let p = CoherenceParams {
        n_null_shuffles: 20,
        ..Default::default()
    };

    let models: [(&str, EmbeddingMatrix); 3] = [
        ("evd-spd-32", SpectralFactor::from_similarity(spd)?.embedding(32)?),
        ("random-projection-32", demo_rp_embedding(&g, 32, 0)?),
        ("shuffled-rp-32", demo_rp_embedding(&g, 32, 0)?.shuffle(9)),
    ];
    for (name, z) in &models {
        show(&interpret(name, z, &sims, &p, None)?);
    }
    println!("* = rate exceeds its null bound");
    Ok(())
}
