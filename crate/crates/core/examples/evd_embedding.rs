//! Builds eigendecomposition embeddings of one relation at several dimensions
//! and shows how well their inner products reproduce the similarity matrix.

use nci::embedding::SpectralFactor;
use nci::relations::{compute_similarity, RelationKind, RelationSpec};
use nci::synthetic::desk_graph;

fn main() -> nci::Result<()> {
    let g = desk_graph(0);
    let s = compute_similarity(&g, &RelationSpec::new(RelationKind::Spd))?;
    let dense = s.symmetrized();
    let factor = SpectralFactor::from_similarity(&s)?;
    println!(
        "{}: top eigenvalues {:?}, clamped fraction {:.4}",
        s.name(),
        factor.eigenvalues()[..4].iter().map(|x| (x * 100.0).round() / 100.0).collect::<Vec<_>>(),
        factor.clamped_fraction()
    );
    for d in [4, 16, 64, g.node_count()] {
        let z = factor.embedding(d)?;
        let gram = z.values().dot(&z.values().t());
        let err = (&gram - &dense).mapv(|x| x * x).sum().sqrt() / dense.mapv(|x| x * x).sum().sqrt();
        println!("d = {d:4}  relative reconstruction error {err:.3e}");
    }
    Ok(())
}
