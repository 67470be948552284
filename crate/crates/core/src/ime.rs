//! Interpretation method evaluation.
//!
//! For every target relation `r_t` the harness builds the most-expressive
//! embedding of `S_{r_t}` by eigendecomposition, asks the method under test to
//! score that embedding against every relation, and records where `r_t`
//! ranks. An accurate method puts the generating relation first; mean
//! reciprocal rank summarizes how often it does.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::baselines::{InterpretationMethod, Method, PreparedScorer};
use crate::embedding::SpectralFactor;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::nci::CoherenceParams;
use crate::relations::cache::SimilarityCache;
use crate::relations::{compute_similarity, RelationSpec, SimilarityMatrix};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetResult {
    pub target: String,
    pub scores: BTreeMap<String, f64>,
    /// One plus the number of relations scoring strictly higher than the target.
    pub rank: usize,
    pub reciprocal_rank: f64,
    /// Other relations whose score equals the target's exactly.
    pub ties: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImeResult {
    pub method: Method,
    pub d: usize,
    pub node_count: usize,
    pub expressiveness: f64,
    pub per_target: Vec<TargetResult>,
    pub mrr: f64,
    pub seed: u64,
    pub params: CoherenceParams,
    pub pair_sample: usize,
    /// Spectral mass removed by clamping negative eigenvalues, per relation.
    pub clamped_fractions: BTreeMap<String, f64>,
    pub similarity_hashes: BTreeMap<String, String>,
}

impl ImeResult {
    /// Rows `method,d,expressiveness,target,relation,score,rank`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,d,expressiveness,target,relation,score,rank\n");
        for t in &self.per_target {
            for (r, v) in &t.scores {
                out.push_str(&format!(
                    "{},{},{:?},{},{},{:?},{}\n",
                    self.method, self.d, self.expressiveness, t.target, r, v, t.rank
                ));
            }
        }
        out
    }

    pub fn total_ties(&self) -> usize {
        self.per_target.iter().map(|t| t.ties).sum()
    }
}

/// `method,d,expressiveness,mrr,ties` summary over several runs.
pub fn mrr_table(results: &[ImeResult]) -> String {
    let mut out = String::from("method,d,expressiveness,mrr,ties\n");
    for r in results {
        out.push_str(&format!(
            "{},{},{:?},{:?},{}\n",
            r.method,
            r.d,
            r.expressiveness,
            r.mrr,
            r.total_ties()
        ));
    }
    out
}

/// `rank = |{j : κ_j > κ_t}| + 1` and the count of exact ties.
pub fn rank_of(scores: &[f64], target: usize) -> (usize, usize) {
    let t = scores[target];
    let higher = scores.iter().filter(|&&s| s > t).count();
    let ties = scores
        .iter()
        .enumerate()
        .filter(|&(j, &s)| j != target && s == t)
        .count();
    (higher + 1, ties)
}

pub fn mean_reciprocal_rank(ranks: &[usize]) -> f64 {
    if ranks.is_empty() {
        return 0.0;
    }
    ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / ranks.len() as f64
}

/// Standard Pearson correlation coefficient.
pub fn pearson_correlation(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::UndefinedCorrelation(format!(
            "need two equal-length vectors of at least 2 values, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("a vector has zero variance".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Similarity matrices and their eigendecompositions, computed once and
/// shared by every dimension and method.
pub struct ImeContext {
    node_count: usize,
    similarities: Vec<SimilarityMatrix>,
    factors: Vec<SpectralFactor>,
}

impl ImeContext {
    pub fn new(g: &Graph, specs: &[RelationSpec], cache: Option<&SimilarityCache>) -> Result<Self> {
        if specs.len() < 2 {
            return Err(Error::Parameter(format!(
                "evaluation needs at least 2 relations, got {}",
                specs.len()
            )));
        }
        let mut names: Vec<String> = specs.iter().map(|s| s.name()).collect();
        names.sort();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Parameter("relation names must be unique".into()));
        }
        let similarities = specs
            .iter()
            .map(|spec| match cache {
                Some(c) => c.get_or_compute(g, spec).map(|(s, _)| s),
                None => compute_similarity(g, spec),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_similarities(similarities)
    }

    pub fn from_similarities(similarities: Vec<SimilarityMatrix>) -> Result<Self> {
        let node_count = similarities.first().map_or(0, |s| s.node_count());
        if similarities.iter().any(|s| s.node_count() != node_count || !s.is_full()) {
            return Err(Error::Parameter("similarity matrices must be full and share one node set".into()));
        }
        let factors = similarities
            .par_iter()
            .map(SpectralFactor::from_similarity)
            .collect::<Result<Vec<_>>>()?;
        Ok(ImeContext {
            node_count,
            similarities,
            factors,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn similarities(&self) -> &[SimilarityMatrix] {
        &self.similarities
    }

    pub fn factors(&self) -> &[SpectralFactor] {
        &self.factors
    }

    fn prepare<'a>(&'a self, method: &dyn InterpretationMethod) -> Result<Vec<Box<dyn PreparedScorer + 'a>>> {
        self.similarities.iter().map(|s| method.prepare(s)).collect()
    }

    /// Runs the evaluation at dimension `d` for `method`.
    pub fn run(
        &self,
        d: usize,
        method: Method,
        params: &CoherenceParams,
        pair_sample: usize,
    ) -> Result<ImeResult> {
        let scorer = method.scorer(params, pair_sample);
        let prepared = self.prepare(scorer.as_ref())?;
        self.run_prepared(d, method, &prepared, params, pair_sample)
    }

    fn run_prepared(
        &self,
        d: usize,
        method: Method,
        prepared: &[Box<dyn PreparedScorer + '_>],
        params: &CoherenceParams,
        pair_sample: usize,
    ) -> Result<ImeResult> {
        let n = self.node_count;
        if d == 0 || d > n {
            return Err(Error::Parameter(format!("dimension {d} outside [1, {n}]")));
        }
        let names: Vec<String> = self.similarities.iter().map(|s| s.name()).collect();
        let per_target = (0..self.similarities.len())
            .into_par_iter()
            .map(|t| {
                let z = self.factors[t].embedding(d)?.normalize_rows();
                let scores = prepared
                    .iter()
                    .enumerate()
                    .map(|(j, p)| {
                        p.score(&z).map(|s| s.value).map_err(|e| Error::ImeCell {
                            target: names[t].clone(),
                            scored: names[j].clone(),
                            source: Box::new(e),
                        })
                    })
                    .collect::<Result<Vec<f64>>>()?;
                let (rank, ties) = rank_of(&scores, t);
                Ok(TargetResult {
                    target: names[t].clone(),
                    scores: names.iter().cloned().zip(scores).collect(),
                    rank,
                    reciprocal_rank: 1.0 / rank as f64,
                    ties,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let ranks: Vec<usize> = per_target.iter().map(|t| t.rank).collect();
        Ok(ImeResult {
            method,
            d,
            node_count: n,
            expressiveness: d as f64 / n as f64,
            mrr: mean_reciprocal_rank(&ranks),
            per_target,
            seed: params.seed,
            params: params.clone(),
            pair_sample,
            clamped_fractions: names
                .iter()
                .cloned()
                .zip(self.factors.iter().map(|f| f.clamped_fraction()))
                .collect(),
            similarity_hashes: names
                .iter()
                .cloned()
                .zip(self.similarities.iter().map(|s| s.content_hash()))
                .collect(),
        })
    }

    /// One result per (method, dimension), methods outermost, dimensions in
    /// the given order. Each method prepares its samples once for all
    /// dimensions.
    pub fn sweep(
        &self,
        dims: &[usize],
        methods: &[Method],
        params: &CoherenceParams,
        pair_sample: usize,
    ) -> Result<Vec<ImeResult>> {
        if dims.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Parameter("sweep dimensions must be sorted ascending".into()));
        }
        let mut out = Vec::with_capacity(dims.len() * methods.len());
        for &m in methods {
            let scorer = m.scorer(params, pair_sample);
            let prepared = self.prepare(scorer.as_ref())?;
            for &d in dims {
                out.push(self.run_prepared(d, m, &prepared, params, pair_sample)?);
            }
        }
        Ok(out)
    }
}

/// Single evaluation run at dimension `d`.
pub fn run_ime(
    g: &Graph,
    relations: &[RelationSpec],
    d: usize,
    method: Method,
    params: &CoherenceParams,
    pair_sample: usize,
) -> Result<ImeResult> {
    ImeContext::new(g, relations, None)?.run(d, method, params, pair_sample)
}

/// Runs every (method, dimension) pair off one set of decompositions.
pub fn expressiveness_sweep(
    g: &Graph,
    relations: &[RelationSpec],
    dims: &[usize],
    methods: &[Method],
    params: &CoherenceParams,
    pair_sample: usize,
) -> Result<Vec<ImeResult>> {
    ImeContext::new(g, relations, None)?.sweep(dims, methods, params, pair_sample)
}

/// Dimensions `round(f · n)` (at least 1, at most `n`), sorted and deduplicated.
pub fn dims_for_expressiveness(n: usize, fractions: &[f64]) -> Vec<usize> {
    let mut dims: Vec<usize> = fractions
        .iter()
        .map(|f| ((f * n as f64).round() as usize).clamp(1, n))
        .collect();
    dims.sort_unstable();
    dims.dedup();
    dims
}
