//! Node relations and their pairwise similarity matrices.
//!
//! Seven relations are supported: normalized link weight, shortest-path
//! proximity, personalized PageRank mass, and cosine overlap of k-hop degree,
//! label and attribute distributions plus raw attribute cosine. Every kernel is
//! a pure function of the graph and runs data-parallel over source nodes.

mod bfs;
pub mod cache;
mod pagerank;
mod propagate;

use std::fmt;

use ndarray::{Array2, ArrayView1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeSet};

pub use bfs::{all_pairs_shortest_path, bfs_distances, DistanceMatrix, UNREACHABLE};
pub use pagerank::{personalized_pagerank, PAGERANK_MAX_ITERATIONS, PAGERANK_TOLERANCE};
pub use propagate::{degree_distribution_vector, khop_feature_distribution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RelationKind {
    Link,
    #[serde(rename = "SPD")]
    Spd,
    PageRank,
    DegreeDist,
    LabelDist,
    Attr,
    AttrDist,
}

impl RelationKind {
    pub const ALL: [RelationKind; 7] = [
        RelationKind::Link,
        RelationKind::Spd,
        RelationKind::PageRank,
        RelationKind::DegreeDist,
        RelationKind::LabelDist,
        RelationKind::Attr,
        RelationKind::AttrDist,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RelationKind::Link => "Link",
            RelationKind::Spd => "SPD",
            RelationKind::PageRank => "PageRank",
            RelationKind::DegreeDist => "DegreeDist",
            RelationKind::LabelDist => "LabelDist",
            RelationKind::Attr => "Attr",
            RelationKind::AttrDist => "AttrDist",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let lower = s.to_ascii_lowercase();
        Some(match lower.as_str() {
            "link" => RelationKind::Link,
            "spd" => RelationKind::Spd,
            "pagerank" | "pr" => RelationKind::PageRank,
            "degreedist" | "deg" => RelationKind::DegreeDist,
            "labeldist" | "label" => RelationKind::LabelDist,
            "attr" => RelationKind::Attr,
            "attrdist" => RelationKind::AttrDist,
            _ => return None,
        })
    }

    fn requirement(self) -> Option<&'static str> {
        match self {
            RelationKind::LabelDist => Some("node labels"),
            RelationKind::Attr | RelationKind::AttrDist => Some("node attributes"),
            _ => None,
        }
    }

    fn uses_hops(self) -> bool {
        matches!(
            self,
            RelationKind::DegreeDist | RelationKind::LabelDist | RelationKind::AttrDist
        )
    }
}

impl fmt::Display for RelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn default_k() -> usize {
    1
}

fn default_alpha() -> f64 {
    0.85
}

/// A relation kind plus its knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelationSpec {
    pub kind: RelationKind,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

impl RelationSpec {
    pub fn new(kind: RelationKind) -> Self {
        RelationSpec {
            kind,
            k: default_k(),
            alpha: default_alpha(),
        }
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    /// All seven relations with default knobs.
    pub fn all() -> Vec<Self> {
        RelationKind::ALL.iter().map(|&k| Self::new(k)).collect()
    }

    /// The relations whose data requirements `g` satisfies.
    pub fn computable_on(g: &Graph) -> Vec<Self> {
        Self::all().into_iter().filter(|s| s.check_capability(g).is_ok()).collect()
    }

    /// Short report name, e.g. `SPD`, `PR`, `1-Deg`, `2-Label`.
    pub fn name(&self) -> String {
        match self.kind {
            RelationKind::Link => "Link".into(),
            RelationKind::Spd => "SPD".into(),
            RelationKind::PageRank if self.alpha == default_alpha() => "PR".into(),
            RelationKind::PageRank => format!("PR@{}", self.alpha),
            RelationKind::DegreeDist => format!("{}-Deg", self.k),
            RelationKind::LabelDist => format!("{}-Label", self.k),
            RelationKind::Attr => "Attr".into(),
            RelationKind::AttrDist => format!("{}-Attr", self.k),
        }
    }

    /// Inverse of [`RelationSpec::name`]; also accepts kind names such as
    /// `PageRank` or `DegreeDist` and a bare `Deg`/`Label` (k = 1).
    pub fn parse_name(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parameter(format!("unknown relation {s:?}"));
        if let Some(alpha) = s.strip_prefix("PR@").or_else(|| s.strip_prefix("pr@")) {
            let alpha: f64 = alpha.parse().map_err(|_| bad())?;
            let spec = Self::new(RelationKind::PageRank).with_alpha(alpha);
            spec.validate()?;
            return Ok(spec);
        }
        if let Some((k, rest)) = s.split_once('-') {
            let k: usize = k.parse().map_err(|_| bad())?;
            let kind = match rest.to_ascii_lowercase().as_str() {
                "deg" | "degreedist" => RelationKind::DegreeDist,
                "label" | "labeldist" => RelationKind::LabelDist,
                "attr" | "attrdist" => RelationKind::AttrDist,
                _ => return Err(bad()),
            };
            let spec = Self::new(kind).with_k(k);
            spec.validate()?;
            return Ok(spec);
        }
        RelationKind::parse(s).map(Self::new).ok_or_else(bad)
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind.uses_hops() && self.k < 1 {
            return Err(Error::Parameter(format!("{}: hop count must be >= 1", self.name())));
        }
        if self.kind == RelationKind::PageRank && !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Parameter(format!(
                "{}: damping {} outside (0, 1)",
                self.name(),
                self.alpha
            )));
        }
        Ok(())
    }

    pub fn check_capability(&self, g: &Graph) -> Result<()> {
        let present = match self.kind {
            RelationKind::LabelDist => g.labels().is_some(),
            RelationKind::Attr | RelationKind::AttrDist => g.attributes().is_some(),
            _ => true,
        };
        if present {
            Ok(())
        } else {
            Err(Error::Capability {
                relation: self.name(),
                requirement: self.kind.requirement().unwrap_or("data"),
            })
        }
    }
}

/// Backing storage for a similarity matrix. Rows are indexed by slot, not by
/// node, when the matrix only holds a subset of source rows.
#[derive(Debug, Clone, PartialEq)]
pub enum Store {
    Dense(Array2<f64>),
    Sparse(Vec<Vec<(usize, f64)>>),
}

/// Pairwise similarities `s_r(u, v)` in `[0, 1]` for one relation.
///
/// The diagonal is defined as 1 for every relation. A matrix may hold only a
/// block of source rows (see [`compute_similarity_rows`]); accessing a row that
/// was not computed panics.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    spec: RelationSpec,
    n: usize,
    symmetric: bool,
    sources: Option<Vec<usize>>,
    store: Store,
}

impl SimilarityMatrix {
    /// Wraps a full dense matrix, clamping into `[0, 1]` and setting the diagonal.
    pub fn from_dense(spec: RelationSpec, mut values: Array2<f64>) -> Result<Self> {
        let n = values.nrows();
        if values.ncols() != n {
            return Err(Error::Parameter("similarity matrix must be square".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("similarity matrix has non-finite entries".into()));
        }
        values.mapv_inplace(|v| v.clamp(0.0, 1.0));
        for u in 0..n {
            values[[u, u]] = 1.0;
        }
        let symmetric = spec.kind != RelationKind::PageRank;
        Ok(SimilarityMatrix {
            spec,
            n,
            symmetric,
            sources: None,
            store: Store::Dense(values),
        })
    }

    pub(crate) fn from_parts(
        spec: RelationSpec,
        n: usize,
        sources: Option<Vec<usize>>,
        store: Store,
    ) -> Self {
        SimilarityMatrix {
            spec,
            n,
            symmetric: spec.kind != RelationKind::PageRank,
            sources,
            store,
        }
    }

    pub fn spec(&self) -> &RelationSpec {
        &self.spec
    }

    pub fn name(&self) -> String {
        self.spec.name()
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.store, Store::Sparse(_))
    }

    pub fn is_full(&self) -> bool {
        self.sources.is_none()
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    /// Source rows held by this matrix (all nodes when full).
    pub fn sources(&self) -> Vec<usize> {
        match &self.sources {
            Some(s) => s.clone(),
            None => (0..self.n).collect(),
        }
    }

    pub fn has_row(&self, u: usize) -> bool {
        self.slot(u).is_some()
    }

    fn slot(&self, u: usize) -> Option<usize> {
        match &self.sources {
            None => (u < self.n).then_some(u),
            Some(s) => s.binary_search(&u).ok(),
        }
    }

    fn slot_or_panic(&self, u: usize) -> usize {
        self.slot(u)
            .unwrap_or_else(|| panic!("row {u} of {} was not computed", self.name()))
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        let slot = self.slot_or_panic(u);
        match &self.store {
            Store::Dense(m) => m[[slot, v]],
            Store::Sparse(rows) => {
                let row = &rows[slot];
                match row.binary_search_by_key(&v, |&(c, _)| c) {
                    Ok(i) => row[i].1,
                    Err(_) => 0.0,
                }
            }
        }
    }

    /// Row `u` as a dense vector of length `n`.
    pub fn row(&self, u: usize) -> Vec<f64> {
        let slot = self.slot_or_panic(u);
        match &self.store {
            Store::Dense(m) => m.row(slot).to_vec(),
            Store::Sparse(rows) => {
                let mut out = vec![0.0; self.n];
                for &(v, x) in &rows[slot] {
                    out[v] = x;
                }
                out
            }
        }
    }

    /// Full dense copy. Panics on a row-block matrix.
    pub fn to_dense(&self) -> Array2<f64> {
        assert!(self.is_full(), "to_dense needs every row of {}", self.name());
        match &self.store {
            Store::Dense(m) => m.clone(),
            Store::Sparse(rows) => {
                let mut m = Array2::zeros((self.n, self.n));
                for (u, row) in rows.iter().enumerate() {
                    for &(v, x) in row {
                        m[[u, v]] = x;
                    }
                }
                m
            }
        }
    }

    /// `(S + Sᵀ) / 2`; a plain copy when the relation is already symmetric.
    pub fn symmetrized(&self) -> Array2<f64> {
        let m = self.to_dense();
        if self.symmetric {
            return m;
        }
        let t = m.t().to_owned();
        (m + t) * 0.5
    }

    /// Calls `f(u, v, value)` for every stored nonzero entry, rows in order.
    pub fn for_each_stored(&self, mut f: impl FnMut(usize, usize, f64)) {
        let sources = self.sources();
        match &self.store {
            Store::Dense(m) => {
                for (slot, row) in m.outer_iter().enumerate() {
                    for (v, &x) in row.iter().enumerate() {
                        if x != 0.0 {
                            f(sources[slot], v, x);
                        }
                    }
                }
            }
            Store::Sparse(rows) => {
                for (slot, row) in rows.iter().enumerate() {
                    for &(v, x) in row {
                        if x != 0.0 {
                            f(sources[slot], v, x);
                        }
                    }
                }
            }
        }
    }

    /// SHA-256 over the relation name and the bit patterns of stored entries.
    pub fn content_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update(self.name().as_bytes());
        h.update((self.n as u64).to_le_bytes());
        self.for_each_stored(|u, v, x| {
            h.update((u as u64).to_le_bytes());
            h.update((v as u64).to_le_bytes());
            h.update(x.to_bits().to_le_bytes());
        });
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Minimum and maximum over off-diagonal stored rows (implicit zeros included).
    pub fn off_diagonal_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for u in self.sources() {
            for (v, x) in self.row(u).into_iter().enumerate() {
                if v != u {
                    lo = lo.min(x);
                    hi = hi.max(x);
                }
            }
        }
        (lo, hi)
    }

    /// Fraction of off-diagonal entries in the stored rows that are exactly zero.
    pub fn zero_fraction(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let sources = self.sources();
        let total = sources.len() * (self.n - 1);
        let mut nonzero = 0usize;
        self.for_each_stored(|u, v, _| {
            if u != v {
                nonzero += 1;
            }
        });
        1.0 - nonzero as f64 / total as f64
    }
}

/// Cosine similarity clamped into `[0, 1]`; zero vectors give 0.
pub fn clamped_cosine(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    let na = a.dot(&a).sqrt();
    let nb = b.dot(&b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (a.dot(&b) / (na * nb)).clamp(0.0, 1.0)
}

/// Computes the full similarity matrix of `spec` on `g`.
pub fn compute_similarity(g: &Graph, spec: &RelationSpec) -> Result<SimilarityMatrix> {
    compute_similarity_rows(g, spec, None)
}

/// Computes only the rows listed in `sources` (all rows when `None`). Every
/// coherence score reads query rows only, so large graphs can skip the rest.
pub fn compute_similarity_rows(
    g: &Graph,
    spec: &RelationSpec,
    sources: Option<&NodeSet>,
) -> Result<SimilarityMatrix> {
    spec.validate()?;
    spec.check_capability(g)?;
    let n = g.node_count();
    let rows: Vec<usize> = match sources {
        Some(s) => s.nodes().to_vec(),
        None => (0..n).collect(),
    };
    let source_field = sources.map(|s| s.nodes().to_vec());
    let store = match spec.kind {
        RelationKind::Link => link_rows(g, &rows),
        RelationKind::Spd => spd_rows(g, &rows),
        RelationKind::PageRank => pagerank_rows(g, &rows, spec.alpha)?,
        RelationKind::DegreeDist => {
            let hist: Vec<Vec<f64>> = (0..n)
                .into_par_iter()
                .map(|u| degree_distribution_vector(g, u, spec.k))
                .collect();
            let width = g.max_degree();
            let m = Array2::from_shape_fn((n, width), |(u, j)| hist[u][j]);
            cosine_rows(&m, &rows)
        }
        RelationKind::LabelDist => {
            let y = g.labels().expect("capability checked").one_hot();
            cosine_rows(&khop_feature_distribution(g, &y, spec.k), &rows)
        }
        RelationKind::Attr => cosine_rows(g.attributes().expect("capability checked"), &rows),
        RelationKind::AttrDist => {
            let x = g.attributes().expect("capability checked");
            cosine_rows(&khop_feature_distribution(g, x, spec.k), &rows)
        }
    };
    Ok(SimilarityMatrix::from_parts(*spec, n, source_field, store))
}

fn link_rows(g: &Graph, rows: &[usize]) -> Store {
    let norm = g.normalized_adjacency_with_self_loops();
    let out = rows
        .iter()
        .map(|&u| {
            norm.rows[u]
                .iter()
                .map(|&(v, x)| (v, if v == u { 1.0 } else { x.clamp(0.0, 1.0) }))
                .collect()
        })
        .collect();
    Store::Sparse(out)
}

/// `(diameter − d + 1) / diameter` for reachable pairs, 0 across components.
pub(crate) fn spd_similarity(distance: u32, diameter: u32) -> f64 {
    if distance == 0 {
        1.0
    } else if distance == UNREACHABLE || diameter == 0 {
        0.0
    } else {
        ((diameter - distance + 1) as f64 / diameter as f64).clamp(0.0, 1.0)
    }
}

fn spd_rows(g: &Graph, rows: &[usize]) -> Store {
    let n = g.node_count();
    let diameter = bfs::diameter(g);
    let data: Vec<Vec<f64>> = rows
        .par_iter()
        .map(|&u| {
            bfs_distances(g, u)
                .into_iter()
                .map(|d| spd_similarity(d, diameter))
                .collect()
        })
        .collect();
    Store::Dense(stack_rows(data, n))
}

fn pagerank_rows(g: &Graph, rows: &[usize], alpha: f64) -> Result<Store> {
    let n = g.node_count();
    let data: Result<Vec<Vec<f64>>> = rows
        .par_iter()
        .map(|&u| {
            let mut pi = personalized_pagerank(g, u, alpha)?;
            for x in pi.iter_mut() {
                *x = x.clamp(0.0, 1.0);
            }
            pi[u] = 1.0;
            Ok(pi)
        })
        .collect();
    Ok(Store::Dense(stack_rows(data?, n)))
}

fn cosine_rows(features: &Array2<f64>, rows: &[usize]) -> Store {
    let n = features.nrows();
    let norms: Vec<f64> = features.outer_iter().map(|r| r.dot(&r).sqrt()).collect();
    let data: Vec<Vec<f64>> = rows
        .par_iter()
        .map(|&u| {
            let xu = features.row(u);
            (0..n)
                .map(|v| {
                    if v == u {
                        1.0
                    } else if norms[u] == 0.0 || norms[v] == 0.0 {
                        0.0
                    } else {
                        (xu.dot(&features.row(v)) / (norms[u] * norms[v])).clamp(0.0, 1.0)
                    }
                })
                .collect()
        })
        .collect();
    Store::Dense(stack_rows(data, n))
}

fn stack_rows(rows: Vec<Vec<f64>>, n: usize) -> Array2<f64> {
    let m = rows.len();
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Array2::from_shape_vec((m, n), flat).expect("rows have length n")
}
