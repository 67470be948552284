use crate::error::{Error, Result};
use crate::graph::Graph;

/// Stop when the L1 change between iterates falls below this.
pub const PAGERANK_TOLERANCE: f64 = 1e-10;
pub const PAGERANK_MAX_ITERATIONS: usize = 1000;

/// Personalized PageRank vector of `source` by power iteration on
/// `π = α P π + (1 − α) e_source`, with `P` column-stochastic (uniform over
/// neighbors). A node without neighbors sends all of its mass back to the
/// source.
pub fn personalized_pagerank(g: &Graph, source: usize, alpha: f64) -> Result<Vec<f64>> {
    let n = g.node_count();
    if source >= n {
        return Err(Error::Parameter(format!("source {source} out of range for {n} nodes")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Parameter(format!("damping {alpha} outside (0, 1)")));
    }
    let inv_deg: Vec<f64> = (0..n)
        .map(|u| match g.degree(u) {
            0 => 0.0,
            d => 1.0 / d as f64,
        })
        .collect();
    let mut pi = vec![0.0; n];
    pi[source] = 1.0;
    let mut next = vec![0.0; n];
    for _ in 0..PAGERANK_MAX_ITERATIONS {
        next.iter_mut().for_each(|x| *x = 0.0);
        let mut to_source = 1.0 - alpha;
        for u in 0..n {
            let mass = pi[u];
            if mass == 0.0 {
                continue;
            }
            if g.degree(u) == 0 {
                to_source += alpha * mass;
            } else {
                let share = alpha * mass * inv_deg[u];
                for &v in g.neighbors(u) {
                    next[v] += share;
                }
            }
        }
        next[source] += to_source;
        let diff: f64 = pi.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut pi, &mut next);
        if diff < PAGERANK_TOLERANCE {
            break;
        }
    }
    Ok(pi)
}
