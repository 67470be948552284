//! The four subcommands. Each writes its JSON/CSV outputs into the run's
//! output directory and returns the same data for programmatic callers.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use super::config::RunConfig;
use crate::baselines::Method;
use crate::embedding::{demo_rp_embedding, load_embedding, EmbeddingMatrix, SpectralFactor};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::ime::{mrr_table, pearson_correlation, ImeContext, ImeResult};
use crate::nci::{interpret, CoherenceReport};
use crate::relations::cache::SimilarityCache;
use crate::relations::{RelationSpec, SimilarityMatrix};

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Wall-clock details live here so the main outputs stay byte-reproducible.
fn write_sidecar(cfg: &RunConfig, command: &str) -> Result<()> {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    #[derive(Serialize)]
    struct Sidecar<'a> {
        command: &'a str,
        finished_unix_time: u64,
        version: &'a str,
    }
    write_json(
        &cfg.out_dir.join(format!("{command}.run.json")),
        &Sidecar {
            command,
            finished_unix_time: secs,
            version: env!("CARGO_PKG_VERSION"),
        },
    )
}

fn similarities(cfg: &RunConfig, g: &Graph, specs: &[RelationSpec]) -> Result<Vec<(SimilarityMatrix, bool)>> {
    let cache = SimilarityCache::new(cfg.cache_dir())?;
    specs.iter().map(|s| cache.get_or_compute(g, s)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelationSummary {
    pub name: String,
    pub cache_file: PathBuf,
    pub cache_hit: bool,
    pub min_off_diagonal: f64,
    pub max_off_diagonal: f64,
    pub zero_fraction: f64,
    pub sparse: bool,
    pub content_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelationsOutput {
    pub graph_fingerprint: String,
    pub node_count: usize,
    pub relations: Vec<RelationSummary>,
}

/// Computes (or loads) every configured similarity matrix into the cache and
/// writes `relations.json`.
pub fn cmd_relations(cfg: &RunConfig) -> Result<RelationsOutput> {
    let g = cfg.load_graph()?;
    let specs = cfg.relation_specs(&g);
    let cache = SimilarityCache::new(cfg.cache_dir())?;
    let mut relations = Vec::with_capacity(specs.len());
    for spec in &specs {
        let (s, hit) = cache.get_or_compute(&g, spec)?;
        let (lo, hi) = s.off_diagonal_range();
        relations.push(RelationSummary {
            name: s.name(),
            cache_file: cache.path_for(&g, spec),
            cache_hit: hit,
            min_off_diagonal: lo,
            max_off_diagonal: hi,
            zero_fraction: s.zero_fraction(),
            sparse: s.is_sparse(),
            content_hash: s.content_hash(),
        });
    }
    let out = RelationsOutput {
        graph_fingerprint: g.fingerprint(),
        node_count: g.node_count(),
        relations,
    };
    write_json(&cfg.out_dir.join("relations.json"), &out)?;
    write_sidecar(cfg, "relations")?;
    Ok(out)
}

/// A baseline method's scores per relation. Relations the method cannot
/// score (too few pairs, constant inputs) carry an error message instead.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineScores {
    pub method: Method,
    pub scores: BTreeMap<String, Option<f64>>,
    pub errors: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InterpretReport {
    pub graph_fingerprint: String,
    pub node_count: usize,
    /// Spectral mass clamped away when the embedding came from an
    /// eigendecomposition.
    pub clamped_fraction: Option<f64>,
    #[serde(flatten)]
    pub coherence: CoherenceReport,
    pub pair_sample: usize,
    pub baselines: Vec<BaselineScores>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub model: String,
    pub model_coherence_score: Option<f64>,
    pub rates: BTreeMap<String, f64>,
    pub significant: BTreeMap<String, bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InterpretOutput {
    pub relations: Vec<String>,
    /// Sorted by model coherence score, highest first.
    pub models: Vec<ComparisonRow>,
    /// Null-hypothesis bounds averaged over the models: what an embedding
    /// that captures nothing would score.
    pub random: ComparisonRow,
    #[serde(skip)]
    pub reports: Vec<InterpretReport>,
}

fn build_embedding(
    cfg: &RunConfig,
    g: &Graph,
    entry: &super::config::EmbeddingEntry,
) -> Result<(EmbeddingMatrix, Option<f64>)> {
    if let Some(p) = &entry.path {
        return Ok((load_embedding(p, g)?, None));
    }
    if let Some(d) = &entry.demo_rp {
        return Ok((demo_rp_embedding(g, d.d, d.seed.unwrap_or(cfg.seed))?, None));
    }
    let req = entry
        .evd
        .as_ref()
        .ok_or_else(|| Error::Config(format!("embedding {} has no source", entry.name)))?;
    let spec = RelationSpec::parse_name(&req.relation)?;
    let cache = SimilarityCache::new(cfg.cache_dir())?;
    let (s, _) = cache.get_or_compute(g, &spec)?;
    let factor = SpectralFactor::from_similarity(&s)?;
    Ok((factor.embedding(req.d)?, Some(factor.clamped_fraction())))
}

/// Scores every configured embedding against every relation, writes
/// `interpret_<name>.json` per embedding plus `interpret_summary.json` and
/// `interpret_table.csv`.
pub fn cmd_interpret(cfg: &RunConfig) -> Result<InterpretOutput> {
    if cfg.embeddings.is_empty() {
        return Err(Error::Config("no embeddings configured".into()));
    }
    let g = cfg.load_graph()?;
    let specs = cfg.relation_specs(&g);
    let sims: Vec<SimilarityMatrix> = similarities(cfg, &g, &specs)?.into_iter().map(|(s, _)| s).collect();
    let names: Vec<String> = sims.iter().map(|s| s.name()).collect();

    let mut reports = Vec::with_capacity(cfg.embeddings.len());
    for entry in &cfg.embeddings {
        let (z, clamped_fraction) = build_embedding(cfg, &g, entry)?;
        let z = z.normalize_rows();
        let coherence = interpret(&entry.name, &z, &sims, &cfg.params, cfg.weights.as_ref())?;
        let mut baselines = Vec::new();
        for &m in cfg.methods.iter().filter(|&&m| m != Method::Nci) {
            let scorer = m.scorer(&cfg.params, cfg.pair_sample);
            let mut scores = BTreeMap::new();
            let mut errors = BTreeMap::new();
            for s in &sims {
                match scorer.score(&z, s) {
                    Ok(v) => {
                        scores.insert(s.name(), Some(v.value));
                    }
                    Err(e @ (Error::InsufficientData(_) | Error::UndefinedCorrelation(_))) => {
                        scores.insert(s.name(), None);
                        errors.insert(s.name(), e.to_string());
                    }
                    Err(e) => return Err(e),
                }
            }
            baselines.push(BaselineScores { method: m, scores, errors });
        }
        let report = InterpretReport {
            graph_fingerprint: g.fingerprint(),
            node_count: g.node_count(),
            clamped_fraction,
            coherence,
            pair_sample: cfg.pair_sample,
            baselines,
        };
        write_json(&cfg.out_dir.join(format!("interpret_{}.json", entry.name)), &report)?;
        reports.push(report);
    }

    let mut models: Vec<ComparisonRow> = reports
        .iter()
        .map(|r| ComparisonRow {
            model: r.coherence.model.clone(),
            model_coherence_score: Some(r.coherence.model_coherence_score),
            rates: r.coherence.rates(),
            significant: r
                .coherence
                .relations
                .iter()
                .map(|x| (x.name.clone(), x.significant))
                .collect(),
        })
        .collect();
    models.sort_by(|a, b| {
        b.model_coherence_score
            .unwrap_or(f64::NEG_INFINITY)
            .total_cmp(&a.model_coherence_score.unwrap_or(f64::NEG_INFINITY))
            .then_with(|| a.model.cmp(&b.model))
    });
    let random = ComparisonRow {
        model: "Random".into(),
        model_coherence_score: None,
        rates: names
            .iter()
            .map(|name| {
                let bounds: Vec<f64> = reports
                    .iter()
                    .filter_map(|r| r.coherence.relation(name))
                    .map(|x| match x.smoothness_bound {
                        Some(b) if x.clustering_rate.is_some() => (x.clustering_bound + b) / 2.0,
                        Some(b) => b,
                        None => x.clustering_bound,
                    })
                    .collect();
                (name.clone(), bounds.iter().sum::<f64>() / bounds.len().max(1) as f64)
            })
            .collect(),
        significant: BTreeMap::new(),
    };
    let out = InterpretOutput {
        relations: names,
        models,
        random,
        reports,
    };
    write_json(&cfg.out_dir.join("interpret_summary.json"), &out)?;
    write_text(&cfg.out_dir.join("interpret_table.csv"), &comparison_csv(&out))?;
    write_sidecar(cfg, "interpret")?;
    Ok(out)
}

fn comparison_csv(out: &InterpretOutput) -> String {
    let mut text = String::from("model,model_coherence_score");
    for r in &out.relations {
        text.push(',');
        text.push_str(r);
    }
    text.push('\n');
    for row in out.models.iter().chain(std::iter::once(&out.random)) {
        text.push_str(&row.model);
        text.push(',');
        if let Some(v) = row.model_coherence_score {
            text.push_str(&format!("{v:?}"));
        }
        for r in &out.relations {
            text.push_str(&format!(",{:?}", row.rates.get(r).copied().unwrap_or(f64::NAN)));
        }
        text.push('\n');
    }
    text
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MrrRow {
    pub method: Method,
    pub d: usize,
    pub expressiveness: f64,
    pub mrr: f64,
    pub ties: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluateOutput {
    pub graph_fingerprint: String,
    pub relations: Vec<String>,
    pub table: Vec<MrrRow>,
    pub results: Vec<ImeResult>,
}

/// Runs method evaluation for every configured (method, dimension) and
/// writes `evaluate_method.json`, `mrr_table.csv` and `ime_scores.csv`.
pub fn cmd_evaluate_method(cfg: &RunConfig) -> Result<EvaluateOutput> {
    let g = cfg.load_graph()?;
    let n = g.node_count();
    let specs = cfg.relation_specs(&g);
    let sims = similarities(cfg, &g, &specs)?.into_iter().map(|(s, _)| s).collect();
    let ctx = ImeContext::from_similarities(sims)?;
    if specs.len() < 2 {
        return Err(Error::Parameter("method evaluation needs at least 2 relations".into()));
    }
    let mut dims = cfg.dims.clone().unwrap_or_else(|| vec![n]);
    dims.sort_unstable();
    dims.dedup();
    if let Some(&d) = dims.iter().find(|&&d| d == 0 || d > n) {
        return Err(Error::Parameter(format!("dimension {d} outside [1, {n}]")));
    }
    let results = ctx.sweep(&dims, &cfg.methods, &cfg.params, cfg.pair_sample)?;
    let out = EvaluateOutput {
        graph_fingerprint: g.fingerprint(),
        relations: specs.iter().map(|s| s.name()).collect(),
        table: results
            .iter()
            .map(|r| MrrRow {
                method: r.method,
                d: r.d,
                expressiveness: r.expressiveness,
                mrr: r.mrr,
                ties: r.total_ties(),
            })
            .collect(),
        results,
    };
    write_json(&cfg.out_dir.join("evaluate_method.json"), &out)?;
    write_text(&cfg.out_dir.join("mrr_table.csv"), &mrr_table(&out.results))?;
    let mut flat = String::new();
    for (i, r) in out.results.iter().enumerate() {
        let csv = r.to_csv();
        flat.push_str(if i == 0 { &csv } else { csv.split_once('\n').map_or("", |x| x.1) });
    }
    write_text(&cfg.out_dir.join("ime_scores.csv"), &flat)?;
    write_sidecar(cfg, "evaluate-method")?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskCorrelation {
    pub task: String,
    pub models: Vec<String>,
    /// Pearson coefficient between the model coherence score and the metric.
    pub model_coherence_score: f64,
    /// Per relation; `None` where the coherence rates do not vary across models.
    pub relations: BTreeMap<String, Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelateOutput {
    pub tasks: Vec<TaskCorrelation>,
}

struct ModelRates {
    omega: f64,
    rates: BTreeMap<String, f64>,
}

fn read_report(out_dir: &Path, model: &str) -> Result<ModelRates> {
    let path = out_dir.join(format!("interpret_{model}.json"));
    let text = fs::read_to_string(&path)
        .map_err(|_| Error::Reference(format!("model {model:?} has no report at {}", path.display())))?;
    let v: serde_json::Value = serde_json::from_str(&text)?;
    let bad = || Error::Config(format!("{} is not an interpretation report", path.display()));
    let omega = v["model_coherence_score"].as_f64().ok_or_else(bad)?;
    let mut rates = BTreeMap::new();
    for r in v["relations"].as_array().ok_or_else(bad)? {
        let name = r["name"].as_str().ok_or_else(bad)?;
        let rate = r["coherence_rate"].as_f64().ok_or_else(bad)?;
        rates.insert(name.to_string(), rate);
    }
    Ok(ModelRates { omega, rates })
}

/// Reads a `model,task,metric` table.
pub fn read_metrics(path: &Path) -> Result<Vec<(String, String, f64)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let headers = rdr
        .headers()
        .map_err(|e| Error::parse(path, 1, e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["model", "task", "metric"] {
        return Err(Error::parse(path, 1, "header must be model,task,metric"));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::parse(path, line, e.to_string()))?;
        let metric: f64 = rec[2]
            .parse()
            .map_err(|_| Error::parse(path, line, format!("metric {:?} is not a number", &rec[2])))?;
        rows.push((rec[0].to_string(), rec[1].to_string(), metric));
    }
    Ok(rows)
}

/// Correlates coherence scores from earlier `interpret` reports with
/// downstream metrics, per task; writes `correlation.json`.
pub fn cmd_correlate(cfg: &RunConfig) -> Result<CorrelateOutput> {
    let path = cfg
        .metrics
        .as_ref()
        .ok_or_else(|| Error::Config("correlate needs a metrics table (`metrics` or --metrics)".into()))?;
    let rows = read_metrics(path)?;
    let mut by_task: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    for (model, task, metric) in rows {
        if by_task.entry(task.clone()).or_default().insert(model.clone(), metric).is_some() {
            return Err(Error::Config(format!("model {model} appears twice for task {task}")));
        }
    }
    let mut reports: BTreeMap<String, ModelRates> = BTreeMap::new();
    for models in by_task.values() {
        for m in models.keys() {
            if !reports.contains_key(m) {
                reports.insert(m.clone(), read_report(&cfg.out_dir, m)?);
            }
        }
    }
    let mut tasks = Vec::new();
    for (task, metrics) in by_task {
        if metrics.len() < 2 {
            return Err(Error::UndefinedCorrelation(format!(
                "task {task} has {} model(s); need at least 2",
                metrics.len()
            )));
        }
        let models: Vec<String> = metrics.keys().cloned().collect();
        let ys: Vec<f64> = metrics.values().copied().collect();
        let omegas: Vec<f64> = models.iter().map(|m| reports[m].omega).collect();
        let omega = pearson_correlation(&omegas, &ys)
            .map_err(|e| Error::UndefinedCorrelation(format!("task {task}: {e}")))?;
        let mut relation_names: Vec<&String> = reports[&models[0]].rates.keys().collect();
        relation_names.retain(|r| models.iter().all(|m| reports[m].rates.contains_key(*r)));
        let relations = relation_names
            .into_iter()
            .map(|r| {
                let xs: Vec<f64> = models.iter().map(|m| reports[m].rates[r]).collect();
                (r.clone(), pearson_correlation(&xs, &ys).ok())
            })
            .collect();
        tasks.push(TaskCorrelation {
            task,
            models,
            model_coherence_score: omega,
            relations,
        });
    }
    let out = CorrelateOutput { tasks };
    write_json(&cfg.out_dir.join("correlation.json"), &out)?;
    write_sidecar(cfg, "correlate")?;
    Ok(out)
}
