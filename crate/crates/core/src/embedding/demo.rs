//! Small random-projection embedding generator for demos and smoke tests.

use ndarray::Array2;
use rand::Rng;

use super::{EmbeddingMatrix, EmbeddingSource};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::substream;

const HOP_WEIGHTS: [f64; 3] = [1.0, 1.0, 0.5];

/// Sparse sign projection `R` (entries ±1 with total density 1/3), propagated
/// as `Σ_k w_k N^k R` over the self-loop normalized adjacency `N` with
/// `w = (1, 1, 0.5)`, then row-normalized.
pub fn demo_rp_embedding(g: &Graph, d: usize, seed: u64) -> Result<EmbeddingMatrix> {
    if d == 0 {
        return Err(Error::Parameter("demo embedding dimension must be >= 1".into()));
    }
    let n = g.node_count();
    let mut rng = substream(seed, "demo-rp", 0);
    let r = Array2::from_shape_simple_fn((n, d), || {
        let x: f64 = rng.random();
        if x < 1.0 / 6.0 {
            1.0
        } else if x < 1.0 / 3.0 {
            -1.0
        } else {
            0.0
        }
    });
    let norm = g.normalized_adjacency_with_self_loops();
    let mut z = Array2::zeros((n, d));
    let mut power = r;
    for w in HOP_WEIGHTS {
        power = norm.mul_dense(&power);
        z.scaled_add(w, &power);
    }
    Ok(EmbeddingMatrix::new(z, EmbeddingSource::DemoRp { seed }).normalize_rows())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_determinism() {
        let g = Graph::new((0..5).map(|i| i.to_string()).collect(), &[(0, 1), (1, 2), (3, 4)]).unwrap();
        let a = demo_rp_embedding(&g, 4, 11).unwrap();
        let b = demo_rp_embedding(&g, 4, 11).unwrap();
        assert_eq!(a.values().dim(), (5, 4));
        assert_eq!(a.values(), b.values());
        assert!(a.is_normalized());
        assert!(demo_rp_embedding(&g, 0, 1).is_err());
    }
}
