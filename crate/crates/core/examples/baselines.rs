//! Scores one embedding with all three interpretation methods, relation by
//! relation.

use nci::baselines::{Method, DEFAULT_PAIR_SAMPLE};
use nci::embedding::SpectralFactor;
use nci::nci::CoherenceParams;
use nci::relations::{compute_similarity, RelationKind, RelationSpec};
use nci::synthetic::desk_graph;

fn main() -> nci::Result<()> {
    let g = desk_graph(0);
    let sims = RelationSpec::computable_on(&g)
        .iter()
        .map(|s| compute_similarity(&g, s))
        .collect::<nci::Result<Vec<_>>>()?;
    let label = sims.iter().find(|s| s.spec().kind == RelationKind::LabelDist).unwrap();
    let z = SpectralFactor::from_similarity(label)?.embedding(16)?;
    println!("scoring the 16-dim EVD embedding of {}", label.name());

    let p = CoherenceParams::default();
    print!("{:14}", "relation");
    for m in Method::ALL {
        print!("{:>14}", m.as_str());
    }
    println!();
    for s in &sims {
        print!("{:14}", s.name());
        for m in Method::ALL {
            match m.scorer(&p, DEFAULT_PAIR_SAMPLE).score(&z, s) {
                Ok(v) => print!("{:>14.4}", v.value),
                Err(_) => print!("{:>14}", "n/a"),
            }
        }
        println!();
    }
    Ok(())
}
