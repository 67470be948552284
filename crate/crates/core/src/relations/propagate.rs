use ndarray::Array2;

use crate::graph::Graph;

/// `Normalize(A^k F)`: k rounds of neighbor summation, then each row divided by
/// its L1 norm. All-zero rows stay zero.
pub fn khop_feature_distribution(g: &Graph, features: &Array2<f64>, k: usize) -> Array2<f64> {
    assert_eq!(features.nrows(), g.node_count(), "feature rows must match node count");
    let mut cur = features.clone();
    for _ in 0..k {
        let mut next = Array2::zeros(cur.raw_dim());
        for u in 0..g.node_count() {
            let mut dst = next.row_mut(u);
            for &v in g.neighbors(u) {
                dst += &cur.row(v);
            }
        }
        cur = next;
    }
    for mut row in cur.outer_iter_mut() {
        let l1: f64 = row.iter().map(|x| x.abs()).sum();
        if l1 > 0.0 {
            row /= l1;
        }
    }
    cur
}

/// Normalized histogram over degrees `1..=δ(G)` of the nodes at exactly `k`
/// hops from `node`. Zero vector when there are none.
pub fn degree_distribution_vector(g: &Graph, node: usize, k: usize) -> Vec<f64> {
    let width = g.max_degree();
    let mut hist = vec![0.0; width];
    let dist = super::bfs::bfs_distances_bounded(g, node, k as u32);
    let mut total = 0.0;
    for (v, &d) in dist.iter().enumerate() {
        if d == k as u32 {
            // reachable at k >= 1 hops implies degree >= 1
            hist[g.degree(v) - 1] += 1.0;
            total += 1.0;
        }
    }
    if total > 0.0 {
        hist.iter_mut().for_each(|h| *h /= total);
    }
    hist
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn graph(n: usize, edges: &[(usize, usize)]) -> Graph {
        Graph::new((0..n).map(|i| i.to_string()).collect(), edges).unwrap()
    }

    #[test]
    fn path_one_hot_k1() {
        let g = graph(3, &[(0, 1), (1, 2)]);
        let y = array![[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]];
        let out = khop_feature_distribution(&g, &y, 1);
        assert_eq!(out.row(0).to_vec(), vec![0.0, 1.0]);
        assert_eq!(out.row(1).to_vec(), vec![1.0, 0.0]);
    }

    #[test]
    fn mixed_neighbor_classes() {
        let g = graph(4, &[(0, 1), (0, 2), (0, 3)]);
        let y = array![[0.0, 1.0], [1.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let out = khop_feature_distribution(&g, &y, 1);
        assert_abs_diff_eq!(out[[0, 0]], 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out[[0, 1]], 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn isolated_node_row_is_zero() {
        let g = graph(3, &[(0, 1)]);
        let y = array![[1.0], [1.0], [1.0]];
        let out = khop_feature_distribution(&g, &y, 2);
        assert_eq!(out[[2, 0]], 0.0);
    }

    #[test]
    fn star_degree_histograms() {
        let g = graph(4, &[(0, 1), (0, 2), (0, 3)]);
        assert_eq!(degree_distribution_vector(&g, 0, 1), vec![1.0, 0.0, 0.0]);
        assert_eq!(degree_distribution_vector(&g, 1, 1), vec![0.0, 0.0, 1.0]);
        // leaves at exactly two hops from a leaf
        assert_eq!(degree_distribution_vector(&g, 1, 2), vec![1.0, 0.0, 0.0]);
        let iso = graph(3, &[(0, 1)]);
        assert_eq!(degree_distribution_vector(&iso, 2, 1), vec![0.0]);
    }
}
