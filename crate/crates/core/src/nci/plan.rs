//! Per-query sampling plans for the clustering and smoothness coherence tests.
//!
//! A plan depends only on the similarity rows, the parameters and the seed, so
//! one plan is evaluated against the real embedding and against every shuffled
//! null embedding.

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::CoherenceParams;
use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::graph::NodeSet;
use crate::relations::SimilarityMatrix;
use crate::rng::substream;
use crate::stats::percentile;

/// Distance gaps at or below this count as ties.
pub const DISTANCE_TIE_TOLERANCE: f64 = 1e-12;

/// Similar nodes (with their similarity) and intruders of one query node.
#[derive(Debug, Clone, PartialEq)]
pub struct QuerySets {
    pub eta_s: f64,
    pub eta_i: f64,
    pub similar: Vec<(usize, f64)>,
    pub intruders: Vec<usize>,
}

/// Splits query `u`'s similarity row over `targets` (self excluded) into
/// similar nodes `s ≥ η_s` and intruders `s < η_i`, with `η_s`, `η_i` the
/// configured percentiles of that row.
///
/// Rows dominated by one value (mostly-zero link rows, for example) can put
/// both percentiles on the row minimum, leaving no node strictly below `η_i`.
/// In that case the minimum tie group becomes the intruder set and is removed
/// from the similar set, so the test contrasts "above the floor" against "at
/// the floor".
pub fn query_sets(row: &[f64], u: usize, targets: &NodeSet, params: &CoherenceParams) -> QuerySets {
    let mut vals: Vec<f64> = targets
        .nodes()
        .iter()
        .filter(|&&v| v != u)
        .map(|&v| row[v])
        .collect();
    if vals.is_empty() {
        return QuerySets {
            eta_s: f64::NAN,
            eta_i: f64::NAN,
            similar: Vec::new(),
            intruders: Vec::new(),
        };
    }
    vals.sort_by(f64::total_cmp);
    let eta_s = percentile(&vals, params.eta_s_percentile);
    let eta_i = percentile(&vals, params.eta_i_percentile);
    let others = || targets.nodes().iter().copied().filter(move |&v| v != u);
    let mut intruders: Vec<usize> = others().filter(|&v| row[v] < eta_i).collect();
    let floor_ties = intruders.is_empty();
    if floor_ties {
        intruders = others().filter(|&v| row[v] <= eta_i).collect();
    }
    let similar = others()
        .filter(|&v| row[v] >= eta_s && !(floor_ties && row[v] <= eta_i))
        .map(|v| (v, row[v]))
        .collect();
    QuerySets {
        eta_s,
        eta_i,
        similar,
        intruders,
    }
}

/// Band thresholds `η_i = ((k − i) / k)(upper − lower) + lower`, `i = 1..k`.
/// With `upper = 1` this is the textbook `((k − i)/k)(1 − η_s) + η_s`.
pub fn band_thresholds(lower: f64, upper: f64, k: usize) -> Vec<f64> {
    (1..=k)
        .map(|i| ((k - i) as f64 / k as f64) * (upper - lower) + lower)
        .collect()
}

/// Samples one node from each similarity band of the similar set and returns
/// them in strictly decreasing similarity order, or `None` when a band is
/// empty.
///
/// Bands partition the similar set's observed range `[min, max]`: band 1 is
/// `[η_1, max]`, band `i > 1` is `[η_i, η_{i−1})`. A value on a boundary
/// belongs to the higher band.
pub fn build_similar_bands<R: Rng>(similar: &[(usize, f64)], k: usize, rng: &mut R) -> Option<Vec<usize>> {
    if similar.is_empty() || k == 0 {
        return None;
    }
    let lower = similar.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let upper = similar.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let thresholds = band_thresholds(lower, upper, k);
    let mut picks = Vec::with_capacity(k);
    for i in 0..k {
        let lo = thresholds[i];
        let members: Vec<usize> = similar
            .iter()
            .filter(|&&(_, s)| s >= lo && (i == 0 || s < thresholds[i - 1]))
            .map(|&(v, _)| v)
            .collect();
        if members.is_empty() {
            return None;
        }
        picks.push(members[rng.random_range(0..members.len())]);
    }
    Some(picks)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SkipCounts {
    pub no_similar: usize,
    pub no_intruders: usize,
    pub empty_band: usize,
}

#[derive(Debug, Clone)]
struct QueryPlan {
    u: usize,
    pairs: Vec<(usize, usize)>,
    bands: Option<Vec<usize>>,
}

/// Sampled clustering pairs and smoothness bands for every query node.
#[derive(Debug, Clone)]
pub struct CoherencePlan {
    relation: String,
    query_count: usize,
    queries: Vec<QueryPlan>,
    skips: SkipCounts,
}

impl CoherencePlan {
    pub fn build(s: &SimilarityMatrix, queries: &NodeSet, targets: &NodeSet, params: &CoherenceParams) -> Self {
        let plans: Vec<(QueryPlan, SkipCounts)> = queries
            .nodes()
            .par_iter()
            .map(|&u| {
                let row = s.row(u);
                let sets = query_sets(&row, u, targets, params);
                let mut skips = SkipCounts::default();
                let pairs = if sets.similar.is_empty() {
                    skips.no_similar = 1;
                    Vec::new()
                } else if sets.intruders.is_empty() {
                    skips.no_intruders = 1;
                    Vec::new()
                } else {
                    let total = sets.similar.len() * sets.intruders.len();
                    let take = params.pairs_per_query.min(total);
                    let mut rng = substream(params.seed, "clustering", u as u64);
                    let mut idx = sample(&mut rng, total, take).into_vec();
                    idx.sort_unstable();
                    idx.into_iter()
                        .map(|p| (sets.similar[p / sets.intruders.len()].0, sets.intruders[p % sets.intruders.len()]))
                        .collect()
                };
                let mut rng = substream(params.seed, "bands", u as u64);
                let bands = build_similar_bands(&sets.similar, params.k_bands, &mut rng);
                if bands.is_none() {
                    skips.empty_band = 1;
                }
                (QueryPlan { u, pairs, bands }, skips)
            })
            .collect();
        let mut skips = SkipCounts::default();
        let mut out = Vec::with_capacity(plans.len());
        for (p, s) in plans {
            skips.no_similar += s.no_similar;
            skips.no_intruders += s.no_intruders;
            skips.empty_band += s.empty_band;
            out.push(p);
        }
        CoherencePlan {
            relation: s.name(),
            query_count: queries.len(),
            queries: out,
            skips,
        }
    }

    pub fn relation(&self) -> &str {
        &self.relation
    }

    pub fn query_count(&self) -> usize {
        self.query_count
    }

    pub fn skips(&self) -> SkipCounts {
        self.skips
    }

    pub fn clustering_usable(&self) -> usize {
        self.queries.iter().filter(|q| !q.pairs.is_empty()).count()
    }

    pub fn smoothness_usable(&self) -> usize {
        self.queries.iter().filter(|q| q.bands.is_some()).count()
    }

    /// The `(query, similar, intruder)` triples drawn for the clustering test.
    pub fn clustering_triples(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.queries
            .iter()
            .flat_map(|q| q.pairs.iter().map(move |&(vs, vi)| (q.u, vs, vi)))
    }

    /// Fraction of sampled pairs with `d(u, v_i) − d(u, v_s) ≥ margin`. Gaps
    /// within the tie tolerance never count, so an embedding that collapses
    /// nodes (σ = 0) cannot pass with a zero margin.
    pub fn clustering_rate(&self, z: &EmbeddingMatrix, margin: f64) -> Result<f64> {
        let (hits, total) = self
            .queries
            .par_iter()
            .map(|q| {
                let hits = q
                    .pairs
                    .iter()
                    .filter(|&&(vs, vi)| {
                        let gap = z.pairwise_distance(q.u, vi) - z.pairwise_distance(q.u, vs);
                        gap >= margin && gap > DISTANCE_TIE_TOLERANCE
                    })
                    .count();
                (hits, q.pairs.len())
            })
            .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
        if total == 0 {
            return Err(Error::DegenerateRelation {
                relation: self.relation.clone(),
            });
        }
        Ok(hits as f64 / total as f64)
    }

    /// Fraction of usable queries whose band nodes are strictly ordered by
    /// increasing embedding distance.
    pub fn smoothness_rate(&self, z: &EmbeddingMatrix) -> Result<f64> {
        let (ok, usable) = self
            .queries
            .par_iter()
            .filter_map(|q| q.bands.as_ref().map(|b| (q.u, b)))
            .map(|(u, bands)| (usize::from(strictly_increasing_distances(z, u, bands)), 1usize))
            .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
        if usable == 0 {
            return Err(Error::DegenerateRelation {
                relation: self.relation.clone(),
            });
        }
        Ok(ok as f64 / usable as f64)
    }
}

fn strictly_increasing_distances(z: &EmbeddingMatrix, u: usize, ordered: &[usize]) -> bool {
    let d: Vec<f64> = ordered.iter().map(|&v| z.pairwise_distance(u, v)).collect();
    d.windows(2).all(|w| w[1] - w[0] > DISTANCE_TIE_TOLERANCE)
}
