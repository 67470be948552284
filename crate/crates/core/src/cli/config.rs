//! Run configuration: one JSON document describing a complete run. Relative
//! paths resolve against the config file's directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::{Method, DEFAULT_PAIR_SAMPLE};
use crate::error::{Error, Result};
use crate::graph::{load_graph, Graph};
use crate::nci::CoherenceParams;
use crate::relations::RelationSpec;
use crate::synthetic::SbmConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    #[serde(default)]
    pub edges: Option<PathBuf>,
    #[serde(default)]
    pub attributes: Option<PathBuf>,
    #[serde(default)]
    pub labels: Option<PathBuf>,
    #[serde(default)]
    pub directed_input: bool,
    /// Generate a stochastic block model instead of reading files.
    #[serde(default)]
    pub synthetic: Option<SbmConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvdRequest {
    pub relation: String,
    pub d: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemoRequest {
    pub d: usize,
    /// Defaults to the run seed.
    #[serde(default)]
    pub seed: Option<u64>,
}

/// A named embedding: a file, a random-projection demo embedding, or the
/// eigendecomposition embedding of one relation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingEntry {
    pub name: String,
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub demo_rp: Option<DemoRequest>,
    #[serde(default)]
    pub evd: Option<EvdRequest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub graph: GraphConfig,
    #[serde(default)]
    pub embeddings: Vec<EmbeddingEntry>,
    /// Defaults to every relation computable on the graph.
    #[serde(default)]
    pub relations: Option<Vec<RelationSpec>>,
    #[serde(default)]
    pub params: CoherenceParams,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_pair_sample")]
    pub pair_sample: usize,
    /// Embedding dimensions for method evaluation; defaults to `[|V|]`.
    #[serde(default)]
    pub dims: Option<Vec<usize>>,
    /// Relation weights for the model coherence score; uniform when absent.
    #[serde(default)]
    pub weights: Option<BTreeMap<String, f64>>,
    /// `model,task,metric` table for `correlate`.
    #[serde(default)]
    pub metrics: Option<PathBuf>,
    pub out_dir: PathBuf,
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
}

fn default_methods() -> Vec<Method> {
    vec![Method::Nci]
}

fn default_pair_sample() -> usize {
    DEFAULT_PAIR_SAMPLE
}

/// Command-line values that replace config keys.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub dims: Option<Vec<usize>>,
    pub methods: Option<Vec<Method>>,
    pub relations: Option<Vec<RelationSpec>>,
    pub metrics: Option<PathBuf>,
}

impl RunConfig {
    /// Reads, resolves relative paths, applies overrides and validates.
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.apply(overrides);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [&mut self.graph.edges, &mut self.graph.attributes, &mut self.graph.labels]
            .into_iter()
            .flatten()
        {
            fix(p);
        }
        for e in &mut self.embeddings {
            if let Some(p) = &mut e.path {
                fix(p);
            }
        }
        if let Some(p) = &mut self.metrics {
            fix(p);
        }
        fix(&mut self.out_dir);
        if let Some(p) = &mut self.cache_dir {
            fix(p);
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(p) = &o.out_dir {
            self.out_dir = p.clone();
        }
        if let Some(p) = &o.cache_dir {
            self.cache_dir = Some(p.clone());
        }
        if let Some(d) = &o.dims {
            self.dims = Some(d.clone());
        }
        if let Some(m) = &o.methods {
            self.methods = m.clone();
        }
        if let Some(r) = &o.relations {
            self.relations = Some(r.clone());
        }
        if let Some(p) = &o.metrics {
            self.metrics = Some(p.clone());
        }
        self.params.seed = self.seed;
    }

    pub fn validate(&self) -> Result<()> {
        let missing = |p: &Path| {
            if p.exists() {
                Ok(())
            } else {
                Err(Error::Config(format!("{} does not exist", p.display())))
            }
        };
        match (&self.graph.edges, &self.graph.synthetic) {
            (Some(e), None) => {
                missing(e)?;
                for p in [&self.graph.attributes, &self.graph.labels].into_iter().flatten() {
                    missing(p)?;
                }
            }
            (None, Some(sbm)) => {
                if self.graph.attributes.is_some() || self.graph.labels.is_some() {
                    return Err(Error::Config("a synthetic graph carries its own attributes and labels".into()));
                }
                if sbm.nodes == 0 {
                    return Err(Error::Config("synthetic graph needs nodes > 0".into()));
                }
            }
            _ => return Err(Error::Config("graph needs exactly one of `edges` or `synthetic`".into())),
        }
        let mut names: Vec<&str> = self.embeddings.iter().map(|e| e.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("embedding name {:?} is used twice", w[0])));
        }
        for e in &self.embeddings {
            if e.name.is_empty() || e.name.contains(['/', '\\']) {
                return Err(Error::Config(format!("embedding name {:?} is not a plain file stem", e.name)));
            }
            let sources = [e.path.is_some(), e.demo_rp.is_some(), e.evd.is_some()];
            if sources.iter().filter(|&&b| b).count() != 1 {
                return Err(Error::Config(format!(
                    "embedding {} needs exactly one of `path`, `demo_rp`, `evd`",
                    e.name
                )));
            }
            if let Some(p) = &e.path {
                missing(p)?;
            }
        }
        if let Some(rels) = &self.relations {
            let mut names: Vec<String> = rels.iter().map(|r| r.name()).collect();
            names.sort();
            if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::Config(format!("relation {} is listed twice", w[0])));
            }
            for r in rels {
                r.validate()?;
            }
        }
        if self.methods.is_empty() {
            return Err(Error::Config("no methods configured".into()));
        }
        if self.pair_sample == 0 {
            return Err(Error::Config("pair_sample must be >= 1".into()));
        }
        if let Some(p) = &self.metrics {
            missing(p)?;
        }
        self.params.validate()
    }

    pub fn load_graph(&self) -> Result<Graph> {
        match (&self.graph.edges, &self.graph.synthetic) {
            (Some(e), _) => load_graph(
                e,
                self.graph.attributes.as_deref(),
                self.graph.labels.as_deref(),
                self.graph.directed_input,
            ),
            (None, Some(sbm)) => sbm.generate(),
            (None, None) => Err(Error::Config("graph has no source".into())),
        }
    }

    /// Configured relations, or all computable on `g`.
    pub fn relation_specs(&self, g: &Graph) -> Vec<RelationSpec> {
        self.relations.clone().unwrap_or_else(|| RelationSpec::computable_on(g))
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.cache_dir.clone().unwrap_or_else(|| self.out_dir.join("cache"))
    }
}

/// Parses a comma-separated list with `f`.
pub fn parse_list<T>(s: &str, f: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty()).map(f).collect()
}

pub fn parse_method(s: &str) -> Result<Method> {
    Method::parse(s).ok_or_else(|| Error::Config(format!("unknown method {s:?}")))
}

pub fn parse_dim(s: &str) -> Result<usize> {
    s.parse().map_err(|_| Error::Config(format!("dimension {s:?} is not a positive integer")))
}
