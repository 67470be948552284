//! Evaluates interpretation methods: each relation's own EVD embedding should
//! score best under that relation. Prints MRR per method across a sweep of
//! embedding dimensions.

use nci::baselines::{Method, DEFAULT_PAIR_SAMPLE};
use nci::ime::{dims_for_expressiveness, mrr_table, ImeContext};
use nci::nci::CoherenceParams;
use nci::relations::RelationSpec;
use nci::synthetic::desk_graph;

fn main() -> nci::Result<()> {
    let g = desk_graph(0);
    let specs = RelationSpec::computable_on(&g);
    let ctx = ImeContext::new(&g, &specs, None)?;
    let dims = dims_for_expressiveness(g.node_count(), &[0.05, 0.25, 1.0]);
    let results = ctx.sweep(&dims, &Method::ALL, &CoherenceParams::default(), DEFAULT_PAIR_SAMPLE)?;
    print!("{}", mrr_table(&results));

    let full = results
        .iter()
        .find(|r| r.method == Method::Nci && r.d == g.node_count())
        .unwrap();
    println!("\nNCI at full rank, rank of each target:");
    for t in &full.per_target {
        println!("  {:8} rank {}", t.target, t.rank);
    }
    Ok(())
}
