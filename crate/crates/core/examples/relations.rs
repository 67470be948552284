//! Computes every relation on a 3-node path and on the 200-node desk graph and
//! prints value ranges and sparsity.

use nci::graph::Graph;
use nci::relations::{compute_similarity, RelationKind, RelationSpec};
use nci::synthetic::desk_graph;

fn main() -> nci::Result<()> {
    let path = Graph::new(vec!["a".into(), "b".into(), "c".into()], &[(0, 1), (1, 2)])?;
    for spec in [
        RelationSpec::new(RelationKind::Link),
        RelationSpec::new(RelationKind::Spd),
        RelationSpec::new(RelationKind::PageRank),
    ] {
        let s = compute_similarity(&path, &spec)?;
        println!("{} on a-b-c:", s.name());
        for u in 0..3 {
            let row: Vec<String> = s.row(u).iter().map(|x| format!("{x:.3}")).collect();
            println!("  {}", row.join(" "));
        }
    }

    let g = desk_graph(0);
    println!("\ndesk graph: {} nodes, {} edges", g.node_count(), g.edge_count());
    for spec in RelationSpec::computable_on(&g) {
        let s = compute_similarity(&g, &spec)?;
        let (lo, hi) = s.off_diagonal_range();
        println!(
            "{:8} range [{lo:.4}, {hi:.4}]  zeros {:5.1}%  {}",
            s.name(),
            100.0 * s.zero_fraction(),
            if s.is_sparse() { "sparse" } else { "dense" }
        );
    }
    Ok(())
}
