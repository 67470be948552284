//! Interpretation scoring functions sharing one interface: NCI, Kendall's τ-b
//! ranking test and pairwise property classification.
//!
//! Each method is split into a relation-dependent preparation step (pair or
//! query sampling, which only looks at the similarity matrix) and a cheap
//! per-embedding score, so IME can reuse one preparation across all target
//! embeddings.

mod kendall;
mod probe;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::nci::{self, CoherenceParams, CoherencePlan};
use crate::relations::SimilarityMatrix;

pub use kendall::{kendall_tau_b, kendall_tau_score, sample_pairs, KendallPrepared, DEFAULT_PAIR_SAMPLE};
pub use probe::{
    pair_features, property_classification_score, train_logistic, LogisticModel, PairDataset,
    LOGISTIC_L2, LOGISTIC_TOLERANCE, MAX_PAIRS_PER_CLASS, MIN_PAIRS_PER_CLASS, TRAIN_FRACTION,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "NCI")]
    Nci,
    KendallTau,
    PropertyClass,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Nci, Method::KendallTau, Method::PropertyClass];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Nci => "NCI",
            Method::KendallTau => "KendallTau",
            Method::PropertyClass => "PropertyClass",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        match s.trim().to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "nci" => Some(Method::Nci),
            "kendalltau" | "kendall" | "tau" => Some(Method::KendallTau),
            "propertyclass" | "property" | "probe" => Some(Method::PropertyClass),
            _ => None,
        }
    }

    /// Inclusive range of score values.
    pub fn value_range(self) -> (f64, f64) {
        match self {
            Method::KendallTau => (-1.0, 1.0),
            _ => (0.0, 1.0),
        }
    }

    pub fn scorer(self, params: &CoherenceParams, pair_sample: usize) -> Box<dyn InterpretationMethod> {
        match self {
            Method::Nci => Box::new(NciMethod { params: params.clone() }),
            Method::KendallTau => Box::new(KendallMethod {
                pair_sample,
                seed: params.seed,
            }),
            Method::PropertyClass => Box::new(PropertyMethod { params: params.clone() }),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `Γ_m(Z, G, r)` for one method and relation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InterpretationScore {
    pub method: Method,
    pub relation: String,
    pub value: f64,
    /// Sampled pairs (Kendall, property classification) or usable queries (NCI).
    pub samples: usize,
    pub seed: u64,
}

pub trait InterpretationMethod: Send + Sync {
    fn method(&self) -> Method;

    /// Samples whatever the method needs from `s` alone.
    fn prepare<'s>(&self, s: &'s SimilarityMatrix) -> Result<Box<dyn PreparedScorer + 's>>;

    fn score(&self, z: &EmbeddingMatrix, s: &SimilarityMatrix) -> Result<InterpretationScore> {
        self.prepare(s)?.score(z)
    }
}

/// A method bound to one relation. `score` normalizes `z` if needed.
pub trait PreparedScorer: Send + Sync {
    fn score(&self, z: &EmbeddingMatrix) -> Result<InterpretationScore>;
}

pub(crate) fn check_rows(z: &EmbeddingMatrix, s: &SimilarityMatrix) -> Result<()> {
    if z.node_count() != s.node_count() {
        return Err(Error::Reference(format!(
            "embedding has {} rows but {} covers {} nodes",
            z.node_count(),
            s.name(),
            s.node_count()
        )));
    }
    Ok(())
}

fn normalized(z: &EmbeddingMatrix) -> std::borrow::Cow<'_, EmbeddingMatrix> {
    if z.is_normalized() {
        std::borrow::Cow::Borrowed(z)
    } else {
        std::borrow::Cow::Owned(z.normalize_rows())
    }
}

/// NCI coherence rate without null bounds.
#[derive(Debug, Clone)]
pub struct NciMethod {
    pub params: CoherenceParams,
}

struct NciPrepared<'s> {
    s: &'s SimilarityMatrix,
    plan: CoherencePlan,
    params: CoherenceParams,
}

impl InterpretationMethod for NciMethod {
    fn method(&self) -> Method {
        Method::Nci
    }

    fn prepare<'s>(&self, s: &'s SimilarityMatrix) -> Result<Box<dyn PreparedScorer + 's>> {
        Ok(Box::new(NciPrepared {
            s,
            plan: self.params.plan(s)?,
            params: self.params.clone(),
        }))
    }
}

impl PreparedScorer for NciPrepared<'_> {
    fn score(&self, z: &EmbeddingMatrix) -> Result<InterpretationScore> {
        check_rows(z, self.s)?;
        let z = normalized(z);
        let sigma = z.distance_std(self.params.distance_sample, self.params.seed);
        let r = nci::score_with_plan(&z, self.s, &self.plan, sigma, &self.params, false)?;
        Ok(InterpretationScore {
            method: Method::Nci,
            relation: r.name,
            value: r.coherence_rate,
            samples: r.clustering_usable.max(r.smoothness_usable),
            seed: self.params.seed,
        })
    }
}

#[derive(Debug, Clone)]
pub struct KendallMethod {
    pub pair_sample: usize,
    pub seed: u64,
}

impl InterpretationMethod for KendallMethod {
    fn method(&self) -> Method {
        Method::KendallTau
    }

    fn prepare<'s>(&self, s: &'s SimilarityMatrix) -> Result<Box<dyn PreparedScorer + 's>> {
        Ok(Box::new(KendallPrepared::new(s, self.pair_sample, self.seed)?))
    }
}

#[derive(Debug, Clone)]
pub struct PropertyMethod {
    pub params: CoherenceParams,
}

struct PropertyPrepared<'s> {
    s: &'s SimilarityMatrix,
    data: PairDataset,
    seed: u64,
}

impl InterpretationMethod for PropertyMethod {
    fn method(&self) -> Method {
        Method::PropertyClass
    }

    fn prepare<'s>(&self, s: &'s SimilarityMatrix) -> Result<Box<dyn PreparedScorer + 's>> {
        Ok(Box::new(PropertyPrepared {
            s,
            data: PairDataset::from_similarity(s, &self.params)?,
            seed: self.params.seed,
        }))
    }
}

impl PreparedScorer for PropertyPrepared<'_> {
    fn score(&self, z: &EmbeddingMatrix) -> Result<InterpretationScore> {
        check_rows(z, self.s)?;
        let value = self.data.held_out_accuracy(&normalized(z), self.seed)?;
        Ok(InterpretationScore {
            method: Method::PropertyClass,
            relation: self.s.name(),
            value,
            samples: self.data.len(),
            seed: self.seed,
        })
    }
}
