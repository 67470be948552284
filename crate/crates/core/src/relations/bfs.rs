use std::collections::VecDeque;

use rayon::prelude::*;

use crate::graph::Graph;

/// Distance sentinel for pairs in different components.
pub const UNREACHABLE: u32 = u32::MAX;

/// Hop distances between every ordered pair, plus the largest finite distance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMatrix {
    n: usize,
    dist: Vec<u32>,
    diameter: u32,
}

impl DistanceMatrix {
    pub fn get(&self, u: usize, v: usize) -> u32 {
        self.dist[u * self.n + v]
    }

    pub fn row(&self, u: usize) -> &[u32] {
        &self.dist[u * self.n..(u + 1) * self.n]
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Maximum finite distance; 0 for edgeless graphs.
    pub fn diameter(&self) -> u32 {
        self.diameter
    }
}

/// Single-source BFS; unreachable nodes carry [`UNREACHABLE`].
pub fn bfs_distances(g: &Graph, source: usize) -> Vec<u32> {
    let mut dist = vec![UNREACHABLE; g.node_count()];
    let mut queue = VecDeque::new();
    dist[source] = 0;
    queue.push_back(source);
    while let Some(u) = queue.pop_front() {
        let next = dist[u] + 1;
        for &v in g.neighbors(u) {
            if dist[v] == UNREACHABLE {
                dist[v] = next;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// BFS that stops expanding past `max_hops`.
pub(crate) fn bfs_distances_bounded(g: &Graph, source: usize, max_hops: u32) -> Vec<u32> {
    let mut dist = vec![UNREACHABLE; g.node_count()];
    let mut queue = VecDeque::new();
    dist[source] = 0;
    queue.push_back(source);
    while let Some(u) = queue.pop_front() {
        if dist[u] == max_hops {
            continue;
        }
        let next = dist[u] + 1;
        for &v in g.neighbors(u) {
            if dist[v] == UNREACHABLE {
                dist[v] = next;
                queue.push_back(v);
            }
        }
    }
    dist
}

fn eccentricity(row: &[u32]) -> u32 {
    row.iter().copied().filter(|&d| d != UNREACHABLE).max().unwrap_or(0)
}

/// BFS from every node.
pub fn all_pairs_shortest_path(g: &Graph) -> DistanceMatrix {
    let n = g.node_count();
    let rows: Vec<Vec<u32>> = (0..n).into_par_iter().map(|u| bfs_distances(g, u)).collect();
    let diameter = rows.iter().map(|r| eccentricity(r)).max().unwrap_or(0);
    DistanceMatrix {
        n,
        dist: rows.into_iter().flatten().collect(),
        diameter,
    }
}

/// Largest finite distance without materializing the distance matrix.
pub(crate) fn diameter(g: &Graph) -> u32 {
    (0..g.node_count())
        .into_par_iter()
        .map(|u| eccentricity(&bfs_distances(g, u)))
        .max()
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, edges: &[(usize, usize)]) -> Graph {
        Graph::new((0..n).map(|i| i.to_string()).collect(), edges).unwrap()
    }

    #[test]
    fn triangle() {
        let d = all_pairs_shortest_path(&graph(3, &[(0, 1), (1, 2), (0, 2)]));
        for u in 0..3 {
            for v in 0..3 {
                assert_eq!(d.get(u, v), u32::from(u != v));
            }
        }
        assert_eq!(d.diameter(), 1);
    }

    #[test]
    fn path() {
        let d = all_pairs_shortest_path(&graph(3, &[(0, 1), (1, 2)]));
        assert_eq!(d.get(0, 2), 2);
        assert_eq!(d.diameter(), 2);
    }

    #[test]
    fn disjoint_edges() {
        let g = graph(4, &[(0, 1), (2, 3)]);
        let d = all_pairs_shortest_path(&g);
        assert_eq!(d.get(0, 2), UNREACHABLE);
        assert_eq!(d.get(3, 2), 1);
        assert_eq!(d.diameter(), 1);
        assert_eq!(diameter(&g), 1);
    }
}
