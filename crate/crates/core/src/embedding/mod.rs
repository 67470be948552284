//! Node embedding matrices and the distance primitives used by every scorer.

mod demo;
mod evd;
mod io;

use std::fmt;

use ndarray::{Array2, ArrayView1};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::substream;

pub use demo::demo_rp_embedding;
pub use evd::{generate_evd_embedding, SpectralFactor, EIGEN_RESIDUAL_TOLERANCE};
pub use io::{load_embedding, save_embedding};

/// Graphs at or below this size get exhaustive pairwise-distance statistics.
pub const EXHAUSTIVE_PAIR_LIMIT: usize = 2000;

/// Where an embedding came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum EmbeddingSource {
    File { name: String },
    Evd { relation: String, d: usize },
    Shuffle { seed: u64 },
    DemoRp { seed: u64 },
    Constructed,
}

impl fmt::Display for EmbeddingSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EmbeddingSource::File { name } => write!(f, "file:{name}"),
            EmbeddingSource::Evd { relation, d } => write!(f, "evd:{relation},{d}"),
            EmbeddingSource::Shuffle { seed } => write!(f, "shuffle:{seed}"),
            EmbeddingSource::DemoRp { seed } => write!(f, "demo-rp:{seed}"),
            EmbeddingSource::Constructed => f.write_str("constructed"),
        }
    }
}

/// A |V|×d embedding whose row `u` belongs to graph node `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    values: Array2<f64>,
    normalized: bool,
    zero_rows: usize,
    source: EmbeddingSource,
}

impl EmbeddingMatrix {
    pub fn new(values: Array2<f64>, source: EmbeddingSource) -> Self {
        EmbeddingMatrix {
            values,
            normalized: false,
            zero_rows: 0,
            source,
        }
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    pub fn row(&self, u: usize) -> ArrayView1<'_, f64> {
        self.values.row(u)
    }

    pub fn node_count(&self) -> usize {
        self.values.nrows()
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Rows left at zero by the last normalization.
    pub fn zero_rows(&self) -> usize {
        self.zero_rows
    }

    pub fn source(&self) -> &EmbeddingSource {
        &self.source
    }

    /// Copy with every nonzero row scaled to unit L2 norm.
    pub fn normalize_rows(&self) -> EmbeddingMatrix {
        let mut values = self.values.clone();
        let mut zero_rows = 0;
        for mut row in values.outer_iter_mut() {
            let norm = row.dot(&row).sqrt();
            if norm == 0.0 {
                zero_rows += 1;
            } else {
                row /= norm;
            }
        }
        EmbeddingMatrix {
            values,
            normalized: true,
            zero_rows,
            source: self.source.clone(),
        }
    }

    /// Euclidean distance between rows `u` and `v`.
    pub fn pairwise_distance(&self, u: usize, v: usize) -> f64 {
        if u == v {
            return 0.0;
        }
        self.values
            .row(u)
            .iter()
            .zip(self.values.row(v))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Rows permuted by a seeded uniform permutation; the row multiset, hence
    /// the pairwise-distance distribution, is unchanged.
    pub fn shuffle(&self, seed: u64) -> EmbeddingMatrix {
        let n = self.node_count();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut substream(seed, "shuffle", 0));
        let values = Array2::from_shape_fn(self.values.raw_dim(), |(i, j)| self.values[[perm[i], j]]);
        EmbeddingMatrix {
            values,
            normalized: self.normalized,
            zero_rows: self.zero_rows,
            source: EmbeddingSource::Shuffle { seed },
        }
    }

    /// Standard deviation σ of the pairwise-distance distribution. Exhaustive
    /// over unordered pairs when `n <= 2000` or when the pair count does not
    /// exceed `sample_size`; otherwise estimated from `sample_size` uniformly
    /// drawn pairs.
    pub fn distance_std(&self, sample_size: usize, seed: u64) -> f64 {
        let n = self.node_count();
        if n < 2 {
            return 0.0;
        }
        let pairs = n * (n - 1) / 2;
        if n <= EXHAUSTIVE_PAIR_LIMIT || pairs <= sample_size {
            self.distance_std_exhaustive()
        } else {
            self.distance_std_sampled(sample_size, seed)
        }
    }

    /// Exhaustive σ. Distances are sorted before summation so any row
    /// permutation yields a bit-identical result.
    pub fn distance_std_exhaustive(&self) -> f64 {
        let n = self.node_count();
        let mut d = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for u in 0..n {
            for v in u + 1..n {
                d.push(self.pairwise_distance(u, v));
            }
        }
        d.sort_by(f64::total_cmp);
        population_std(&d)
    }

    /// σ from `sample_size` unordered pairs drawn uniformly with replacement.
    pub fn distance_std_sampled(&self, sample_size: usize, seed: u64) -> f64 {
        let n = self.node_count();
        if n < 2 || sample_size == 0 {
            return 0.0;
        }
        let mut rng = substream(seed, "distance-std", 0);
        let d: Vec<f64> = (0..sample_size)
            .map(|_| {
                let u = rng.random_range(0..n);
                let mut v = rng.random_range(0..n - 1);
                if v >= u {
                    v += 1;
                }
                self.pairwise_distance(u, v)
            })
            .collect();
        population_std(&d)
    }
}

fn population_std(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    var.sqrt()
}
