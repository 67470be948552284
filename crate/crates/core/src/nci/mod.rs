//! Node coherence rates.
//!
//! For each relation and query node the clustering test samples
//! (similar, intruder) pairs and asks whether the intruder sits at least
//! `c·σ` further away than the similar node, σ being the spread of all pairwise
//! embedding distances. The smoothness test draws one node from each of `k`
//! similarity bands and asks whether embedding distance reproduces their
//! order. Both rates are compared with what a row-shuffled embedding achieves
//! by chance: `2 / (2 + c²)` for clustering (a one-sided Chebyshev bound) and
//! an empirical 95th percentile over shuffles for smoothness.

mod plan;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::graph::{NodeRole, NodeSet};
use crate::relations::SimilarityMatrix;
use crate::stats::percentile;

pub use plan::{
    band_thresholds, build_similar_bands, query_sets, CoherencePlan, QuerySets, SkipCounts,
    DISTANCE_TIE_TOLERANCE,
};

/// Percentile of shuffled smoothness rates used as the smoothness null bound.
pub const SMOOTHNESS_NULL_PERCENTILE: f64 = 95.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoherenceParams {
    /// Margin multiplier on σ of the distance distribution.
    pub c: f64,
    pub eta_s_percentile: f64,
    pub eta_i_percentile: f64,
    /// Sampled (similar, intruder) pairs per query node.
    #[serde(rename = "K", alias = "pairs_per_query")]
    pub pairs_per_query: usize,
    pub k_bands: usize,
    pub query_fraction: f64,
    pub n_null_shuffles: usize,
    /// Pair budget for σ on graphs too large for exhaustive pairs.
    pub distance_sample: usize,
    pub seed: u64,
}

impl Default for CoherenceParams {
    fn default() -> Self {
        CoherenceParams {
            c: 1.64,
            eta_s_percentile: 70.0,
            eta_i_percentile: 5.0,
            pairs_per_query: 3,
            k_bands: 3,
            query_fraction: 1.0,
            n_null_shuffles: 100,
            distance_sample: 100_000,
            seed: 0,
        }
    }
}

impl CoherenceParams {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Parameter(m));
        if !(self.c > 0.0) || !self.c.is_finite() {
            return fail(format!("c = {} must be > 0", self.c));
        }
        if !(0.0 <= self.eta_i_percentile
            && self.eta_i_percentile < self.eta_s_percentile
            && self.eta_s_percentile <= 100.0)
        {
            return fail(format!(
                "need 0 <= eta_i_percentile ({}) < eta_s_percentile ({}) <= 100",
                self.eta_i_percentile, self.eta_s_percentile
            ));
        }
        if self.pairs_per_query < 1 {
            return fail("K must be >= 1".into());
        }
        if self.k_bands < 2 {
            return fail("k_bands must be >= 2".into());
        }
        if self.n_null_shuffles < 1 {
            return fail("n_null_shuffles must be >= 1".into());
        }
        if !(self.query_fraction > 0.0 && self.query_fraction <= 1.0) {
            return fail(format!("query_fraction {} outside (0, 1]", self.query_fraction));
        }
        Ok(())
    }

    pub fn query_set(&self, node_count: usize) -> Result<NodeSet> {
        NodeSet::sample(node_count, self.query_fraction, self.seed, NodeRole::Query)
    }

    pub fn target_set(&self, node_count: usize) -> Result<NodeSet> {
        NodeSet::all(node_count, NodeRole::Target)
    }

    /// Sampling plan for `s` under these parameters.
    pub fn plan(&self, s: &SimilarityMatrix) -> Result<CoherencePlan> {
        self.validate()?;
        let n = s.node_count();
        Ok(CoherencePlan::build(s, &self.query_set(n)?, &self.target_set(n)?, self))
    }
}

fn normalized(z: &EmbeddingMatrix) -> std::borrow::Cow<'_, EmbeddingMatrix> {
    if z.is_normalized() {
        std::borrow::Cow::Borrowed(z)
    } else {
        std::borrow::Cow::Owned(z.normalize_rows())
    }
}

fn check_rows(z: &EmbeddingMatrix, s: &SimilarityMatrix) -> Result<()> {
    if z.node_count() != s.node_count() {
        return Err(Error::Reference(format!(
            "embedding has {} rows, similarity {} covers {} nodes",
            z.node_count(),
            s.name(),
            s.node_count()
        )));
    }
    Ok(())
}

/// `2 / (2 + c²)`.
pub fn clustering_null_bound(c: f64) -> Result<f64> {
    if !(c >= 0.0) {
        return Err(Error::Parameter(format!("margin multiplier {c} must be >= 0")));
    }
    Ok(2.0 / (2.0 + c * c))
}

pub fn clustering_coherence_rate(z: &EmbeddingMatrix, s: &SimilarityMatrix, p: &CoherenceParams) -> Result<f64> {
    check_rows(z, s)?;
    let z = normalized(z);
    let sigma = z.distance_std(p.distance_sample, p.seed);
    p.plan(s)?.clustering_rate(&z, p.c * sigma)
}

pub fn smoothness_coherence_rate(z: &EmbeddingMatrix, s: &SimilarityMatrix, p: &CoherenceParams) -> Result<f64> {
    check_rows(z, s)?;
    p.plan(s)?.smoothness_rate(&normalized(z))
}

/// 95th percentile (interpolated) of smoothness rates on `n_null_shuffles`
/// row-shuffled copies of `z`, seeded `seed + 1 ..= seed + n`.
pub fn smoothness_null_bound(z: &EmbeddingMatrix, s: &SimilarityMatrix, p: &CoherenceParams) -> Result<f64> {
    check_rows(z, s)?;
    let plan = p.plan(s)?;
    smoothness_null_bound_with_plan(&normalized(z), &plan, p)
}

fn smoothness_null_rates(z: &EmbeddingMatrix, plan: &CoherencePlan, p: &CoherenceParams) -> Result<Vec<f64>> {
    if p.n_null_shuffles == 0 {
        return Err(Error::Parameter("n_null_shuffles must be >= 1".into()));
    }
    (1..=p.n_null_shuffles as u64)
        .into_par_iter()
        .map(|i| plan.smoothness_rate(&z.shuffle(p.seed.wrapping_add(i))))
        .collect()
}

fn smoothness_null_bound_with_plan(z: &EmbeddingMatrix, plan: &CoherencePlan, p: &CoherenceParams) -> Result<f64> {
    let mut rates = smoothness_null_rates(z, plan, p)?;
    rates.sort_by(f64::total_cmp);
    Ok(percentile(&rates, SMOOTHNESS_NULL_PERCENTILE))
}

/// Mean of the clustering and smoothness rates.
pub fn coherence_rate(clustering: f64, smoothness: f64) -> f64 {
    (clustering + smoothness) / 2.0
}

/// `Σ_r ω_r Γ_r`. Uniform weights when `weights` is `None`; otherwise the
/// weights must cover exactly the same relations, be nonnegative and sum to 1.
pub fn model_coherence_score(rates: &BTreeMap<String, f64>, weights: Option<&BTreeMap<String, f64>>) -> Result<f64> {
    if rates.is_empty() {
        return Err(Error::Key("no relations to aggregate".into()));
    }
    let Some(w) = weights else {
        return Ok(rates.values().sum::<f64>() / rates.len() as f64);
    };
    if w.len() != rates.len() || w.keys().any(|k| !rates.contains_key(k)) {
        let missing: Vec<&String> = rates.keys().filter(|k| !w.contains_key(*k)).collect();
        let extra: Vec<&String> = w.keys().filter(|k| !rates.contains_key(*k)).collect();
        return Err(Error::Key(format!(
            "weights lack {missing:?} and have unknown {extra:?}"
        )));
    }
    if let Some((k, v)) = w.iter().find(|(_, v)| !(**v >= 0.0)) {
        return Err(Error::Parameter(format!("weight for {k} is {v}, must be >= 0")));
    }
    let total: f64 = w.values().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Constraint(total));
    }
    Ok(rates.iter().map(|(k, r)| w[k] * r).sum())
}

/// Coherence of one embedding with one relation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelationCoherence {
    pub name: String,
    /// `None` when every query lacked similar nodes or intruders.
    pub clustering_rate: Option<f64>,
    pub clustering_bound: f64,
    /// `None` when every query had an empty similarity band.
    pub smoothness_rate: Option<f64>,
    pub smoothness_bound: Option<f64>,
    /// Mean of the available rates.
    pub coherence_rate: f64,
    pub significant: bool,
    /// Both rates equal 1.
    pub most_expressive: bool,
    /// Usable queries over all queries, taking the smaller of the two tests.
    pub usable_query_fraction: f64,
    pub query_count: usize,
    pub clustering_usable: usize,
    pub smoothness_usable: usize,
    pub skipped: SkipCounts,
    pub similarity_hash: String,
}

/// Scores `z` (row-normalized internally) against one relation. Null bounds
/// are computed when `with_null` is set; otherwise the smoothness bound is
/// `None` and `significant` only reflects the clustering bound.
pub fn score_relation(
    z: &EmbeddingMatrix,
    s: &SimilarityMatrix,
    p: &CoherenceParams,
    with_null: bool,
) -> Result<RelationCoherence> {
    check_rows(z, s)?;
    let z = normalized(z);
    let sigma = z.distance_std(p.distance_sample, p.seed);
    let plan = p.plan(s)?;
    score_with_plan(&z, s, &plan, sigma, p, with_null)
}

pub(crate) fn score_with_plan(
    z: &EmbeddingMatrix,
    s: &SimilarityMatrix,
    plan: &CoherencePlan,
    sigma: f64,
    p: &CoherenceParams,
    with_null: bool,
) -> Result<RelationCoherence> {
    let degenerate_ok = |r: Result<f64>| match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::DegenerateRelation { .. }) => Ok(None),
        Err(e) => Err(e),
    };
    let clustering_rate = degenerate_ok(plan.clustering_rate(z, p.c * sigma))?;
    let smoothness_rate = degenerate_ok(plan.smoothness_rate(z))?;
    let clustering_bound = clustering_null_bound(p.c)?;
    let smoothness_bound = match (with_null, smoothness_rate) {
        (true, Some(_)) => Some(smoothness_null_bound_with_plan(z, plan, p)?),
        _ => None,
    };
    let coherence = match (clustering_rate, smoothness_rate) {
        (Some(c), Some(s)) => coherence_rate(c, s),
        (Some(c), None) => c,
        (None, Some(s)) => s,
        (None, None) => {
            return Err(Error::DegenerateRelation {
                relation: s.name(),
            })
        }
    };
    let clu_sig = clustering_rate.map(|c| c > clustering_bound);
    let smo_sig = match (smoothness_rate, smoothness_bound) {
        (Some(r), Some(b)) => Some(r > b),
        _ => None,
    };
    let significant = match (clu_sig, smo_sig) {
        (Some(a), Some(b)) => a && b,
        (Some(a), None) => a,
        (None, Some(b)) => b,
        (None, None) => false,
    };
    let q = plan.query_count().max(1) as f64;
    Ok(RelationCoherence {
        name: s.name(),
        clustering_rate,
        clustering_bound,
        smoothness_rate,
        smoothness_bound,
        coherence_rate: coherence,
        significant,
        most_expressive: clustering_rate == Some(1.0) && smoothness_rate == Some(1.0),
        usable_query_fraction: plan.clustering_usable().min(plan.smoothness_usable()) as f64 / q,
        query_count: plan.query_count(),
        clustering_usable: plan.clustering_usable(),
        smoothness_usable: plan.smoothness_usable(),
        skipped: plan.skips(),
        similarity_hash: s.content_hash(),
    })
}

/// Full interpretation of one embedding against a relation set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoherenceReport {
    pub model: String,
    pub method: String,
    pub source: String,
    pub params: CoherenceParams,
    pub distance_std: f64,
    pub zero_rows: usize,
    pub relations: Vec<RelationCoherence>,
    pub weights: BTreeMap<String, f64>,
    pub model_coherence_score: f64,
}

impl CoherenceReport {
    pub fn rates(&self) -> BTreeMap<String, f64> {
        self.relations
            .iter()
            .map(|r| (r.name.clone(), r.coherence_rate))
            .collect()
    }

    pub fn relation(&self, name: &str) -> Option<&RelationCoherence> {
        self.relations.iter().find(|r| r.name == name)
    }
}

/// Scores `z` against every similarity matrix with null bounds and aggregates
/// the model coherence score.
pub fn interpret(
    model: &str,
    z: &EmbeddingMatrix,
    sims: &[SimilarityMatrix],
    p: &CoherenceParams,
    weights: Option<&BTreeMap<String, f64>>,
) -> Result<CoherenceReport> {
    p.validate()?;
    let zn = normalized(z);
    let sigma = zn.distance_std(p.distance_sample, p.seed);
    let mut relations = Vec::with_capacity(sims.len());
    for s in sims {
        check_rows(&zn, s)?;
        let plan = p.plan(s)?;
        relations.push(score_with_plan(&zn, s, &plan, sigma, p, true)?);
    }
    let rates: BTreeMap<String, f64> = relations
        .iter()
        .map(|r| (r.name.clone(), r.coherence_rate))
        .collect();
    let score = model_coherence_score(&rates, weights)?;
    let weights = match weights {
        Some(w) => w.clone(),
        None => rates.keys().map(|k| (k.clone(), 1.0 / rates.len() as f64)).collect(),
    };
    Ok(CoherenceReport {
        model: model.to_string(),
        method: "NCI".into(),
        source: z.source().to_string(),
        params: p.clone(),
        distance_std: sigma,
        zero_rows: zn.zero_rows(),
        relations,
        weights,
        model_coherence_score: score,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::EmbeddingSource;
    use crate::relations::{RelationKind, RelationSpec};
    use approx::assert_abs_diff_eq;
    use ndarray::Array2;

    #[test]
    fn cantelli_bound_values() {
        assert_eq!(clustering_null_bound(0.0).unwrap(), 1.0);
        assert_abs_diff_eq!(clustering_null_bound(1.64).unwrap(), 2.0 / 4.6896, epsilon = 1e-15);
        assert_abs_diff_eq!(clustering_null_bound(10.0).unwrap(), 2.0 / 102.0, epsilon = 1e-15);
        assert!(clustering_null_bound(-1.0).is_err());
    }

    #[test]
    fn aggregate_examples() {
        assert_abs_diff_eq!(coherence_rate(0.4, 0.6), 0.5, epsilon = 1e-15);
        assert_eq!(coherence_rate(1.0, 1.0), 1.0);
        assert_eq!(coherence_rate(0.0, 0.0), 0.0);
    }

    #[test]
    fn model_score_examples() {
        let rates: BTreeMap<String, f64> = [("a".to_string(), 1.0), ("b".to_string(), 1.0)].into();
        assert_eq!(model_coherence_score(&rates, None).unwrap(), 1.0);
        let rates: BTreeMap<String, f64> = [("a".to_string(), 0.2), ("b".to_string(), 0.8)].into();
        let w: BTreeMap<String, f64> = [("a".to_string(), 0.5), ("b".to_string(), 0.5)].into();
        assert_abs_diff_eq!(model_coherence_score(&rates, Some(&w)).unwrap(), 0.5, epsilon = 1e-15);
        let bad: BTreeMap<String, f64> = [("a".to_string(), 0.7), ("b".to_string(), 0.7)].into();
        assert!(matches!(model_coherence_score(&rates, Some(&bad)), Err(Error::Constraint(_))));
        let other: BTreeMap<String, f64> = [("a".to_string(), 0.5), ("c".to_string(), 0.5)].into();
        assert!(matches!(model_coherence_score(&rates, Some(&other)), Err(Error::Key(_))));
    }

    #[test]
    fn params_validation() {
        assert!(CoherenceParams::default().validate().is_ok());
        let bad = [
            CoherenceParams { c: 0.0, ..Default::default() },
            CoherenceParams { eta_i_percentile: 80.0, ..Default::default() },
            CoherenceParams { pairs_per_query: 0, ..Default::default() },
            CoherenceParams { k_bands: 1, ..Default::default() },
            CoherenceParams { n_null_shuffles: 0, ..Default::default() },
        ];
        for p in bad {
            assert!(p.validate().is_err(), "{p:?}");
        }
    }

    #[test]
    fn params_json_uses_capital_k() {
        let json = serde_json::to_value(CoherenceParams::default()).unwrap();
        assert_eq!(json["K"], 3);
        let back: CoherenceParams = serde_json::from_str(r#"{"K": 5, "c": 2.0}"#).unwrap();
        assert_eq!(back.pairs_per_query, 5);
        assert_eq!(back.k_bands, 3);
    }

    /// Query node 0; similar nodes at distance ≈ 0.1 and intruders at ≈ 1.9 on
    /// the unit circle.
    fn separated_fixture() -> (EmbeddingMatrix, SimilarityMatrix) {
        let n = 41;
        let mut sim = Array2::zeros((n, n));
        let mut z = Array2::zeros((n, 2));
        let at = |d: f64| {
            // chord length d on the unit circle
            let theta = 2.0 * (d / 2.0).asin();
            [theta.cos(), theta.sin()]
        };
        z[[0, 0]] = 1.0;
        for v in 1..n {
            let similar = v <= 20;
            let s = if similar { 0.9 + v as f64 * 1e-3 } else { 0.01 * (v - 20) as f64 / 20.0 };
            sim[[0, v]] = s;
            sim[[v, 0]] = s;
            let d = if similar { 0.1 + v as f64 * 1e-4 } else { 1.9 };
            let p = at(d);
            z[[v, 0]] = p[0];
            z[[v, 1]] = p[1];
        }
        let s = SimilarityMatrix::from_dense(RelationSpec::new(RelationKind::Spd), sim).unwrap();
        (EmbeddingMatrix::new(z, EmbeddingSource::Constructed), s)
    }

    #[test]
    fn separated_similar_and_intruders_score_one() {
        let (z, s) = separated_fixture();
        let p = CoherenceParams {
            query_fraction: 1.0,
            ..Default::default()
        };
        // only node 0 has a meaningful row; other queries still sample pairs
        let plan = CoherencePlan::build(
            &s,
            &NodeSet::new(vec![0], 41, NodeRole::Query).unwrap(),
            &NodeSet::all(41, NodeRole::Target).unwrap(),
            &p,
        );
        let sigma = z.normalize_rows().distance_std(p.distance_sample, 0);
        assert!(1.64 * sigma < 1.7);
        assert_eq!(plan.clustering_rate(&z.normalize_rows(), p.c * sigma).unwrap(), 1.0);
    }

    #[test]
    fn partial_hits_count_directly() {
        // one query, exactly three pairs available; two clear the margin
        let n = 5;
        let mut sim = Array2::zeros((n, n));
        // node 0: similar {1}, intruders {2, 3, 4} once percentiles resolve
        for (v, s) in [(1, 0.9), (2, 0.0), (3, 0.0), (4, 0.0)] {
            sim[[0, v]] = s;
            sim[[v, 0]] = s;
        }
        let s = SimilarityMatrix::from_dense(RelationSpec::new(RelationKind::Spd), sim).unwrap();
        let z = ndarray::array![[0.0, 0.0], [0.1, 0.0], [2.0, 0.0], [3.0, 0.0], [0.05, 0.0]];
        let z = EmbeddingMatrix::new(z, EmbeddingSource::Constructed);
        let p = CoherenceParams::default();
        let plan = CoherencePlan::build(
            &s,
            &NodeSet::new(vec![0], n, NodeRole::Query).unwrap(),
            &NodeSet::all(n, NodeRole::Target).unwrap(),
            &p,
        );
        assert_eq!(plan.clustering_triples().count(), 3);
        let rate = plan.clustering_rate(&z, 0.5).unwrap();
        assert_abs_diff_eq!(rate, 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn constant_embedding_scores_zero() {
        let n = 30;
        let sim = Array2::from_shape_fn((n, n), |(u, v)| 1.0 - (u as f64 - v as f64).abs() / n as f64);
        let s = SimilarityMatrix::from_dense(RelationSpec::new(RelationKind::Spd), sim).unwrap();
        let z = EmbeddingMatrix::new(Array2::from_elem((n, 3), 1.0), EmbeddingSource::Constructed);
        let p = CoherenceParams {
            n_null_shuffles: 5,
            ..Default::default()
        };
        assert_eq!(smoothness_coherence_rate(&z, &s, &p).unwrap(), 0.0);
        assert_eq!(smoothness_null_bound(&z, &s, &p).unwrap(), 0.0);
        // σ = 0 makes the margin 0; zero gaps must still fail
        assert_eq!(clustering_coherence_rate(&z, &s, &p).unwrap(), 0.0);
    }

    #[test]
    fn single_shuffle_bound_is_that_rate() {
        let n = 40;
        let sim = Array2::from_shape_fn((n, n), |(u, v)| 1.0 - (u as f64 - v as f64).abs() / n as f64);
        let s = SimilarityMatrix::from_dense(RelationSpec::new(RelationKind::Spd), sim).unwrap();
        let z = EmbeddingMatrix::new(
            Array2::from_shape_fn((n, 2), |(i, j)| ((i * 7 + j * 3) % 11) as f64),
            EmbeddingSource::Constructed,
        );
        let p = CoherenceParams {
            n_null_shuffles: 1,
            seed: 4,
            ..Default::default()
        };
        let expected = smoothness_coherence_rate(&z.normalize_rows().shuffle(5), &s, &p).unwrap();
        assert_eq!(smoothness_null_bound(&z, &s, &p).unwrap(), expected);
        let zero = CoherenceParams {
            n_null_shuffles: 0,
            ..Default::default()
        };
        assert!(smoothness_null_bound(&z, &s, &zero).is_err());
    }
}
