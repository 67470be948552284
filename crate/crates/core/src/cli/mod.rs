//! Command-line surface: `relations`, `interpret`, `evaluate-method` and
//! `correlate`, each driven by a JSON run config whose keys the flags override.

mod commands;
mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::Result;
use crate::relations::RelationSpec;

pub use commands::{
    cmd_correlate, cmd_evaluate_method, cmd_interpret, cmd_relations, read_metrics, BaselineScores,
    ComparisonRow, CorrelateOutput, EvaluateOutput, InterpretOutput, InterpretReport, MrrRow,
    RelationSummary, RelationsOutput, TaskCorrelation,
};
pub use config::{
    parse_dim, parse_list, parse_method, DemoRequest, EmbeddingEntry, EvdRequest, GraphConfig, Overrides,
    RunConfig,
};

#[derive(Debug, Parser)]
#[command(name = "nci", version, about = "Relation coherence of node embeddings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute and cache the configured similarity matrices.
    Relations(CommonArgs),
    /// Coherence reports for every configured embedding.
    Interpret(CommonArgs),
    /// Rank-based accuracy of interpretation methods on synthesized embeddings.
    EvaluateMethod(CommonArgs),
    /// Correlate model coherence scores with downstream metrics.
    Correlate {
        #[command(flatten)]
        common: CommonArgs,
        /// `model,task,metric` table.
        #[arg(long)]
        metrics: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    /// Comma-separated embedding dimensions.
    #[arg(long)]
    pub dims: Option<String>,
    /// Comma-separated methods: NCI, KendallTau, PropertyClass.
    #[arg(long)]
    pub methods: Option<String>,
    /// Comma-separated relation names, e.g. `Link,SPD,PR,2-Deg`.
    #[arg(long)]
    pub relations: Option<String>,
}

impl CommonArgs {
    pub fn overrides(&self) -> Result<Overrides> {
        Ok(Overrides {
            seed: self.seed,
            out_dir: self.out_dir.clone(),
            cache_dir: self.cache_dir.clone(),
            dims: self.dims.as_deref().map(|s| parse_list(s, parse_dim)).transpose()?,
            methods: self.methods.as_deref().map(|s| parse_list(s, parse_method)).transpose()?,
            relations: self
                .relations
                .as_deref()
                .map(|s| parse_list(s, RelationSpec::parse_name))
                .transpose()?,
            metrics: None,
        })
    }

    pub fn load(&self) -> Result<RunConfig> {
        RunConfig::load(&self.config, &self.overrides()?)
    }
}

/// Runs one parsed command and returns a short human summary.
pub fn run(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Relations(a) => {
            let out = cmd_relations(&a.load()?)?;
            let mut s = String::new();
            for r in &out.relations {
                s += &format!(
                    "{:10} range [{:.4}, {:.4}] zeros {:.1}%{}\n",
                    r.name,
                    r.min_off_diagonal,
                    r.max_off_diagonal,
                    100.0 * r.zero_fraction,
                    if r.cache_hit { "  (cached)" } else { "" }
                );
            }
            Ok(s)
        }
        Command::Interpret(a) => {
            let out = cmd_interpret(&a.load()?)?;
            let mut s = String::new();
            for m in &out.models {
                s += &format!("{:16} {:.4}\n", m.model, m.model_coherence_score.unwrap_or(f64::NAN));
            }
            Ok(s)
        }
        Command::EvaluateMethod(a) => {
            let out = cmd_evaluate_method(&a.load()?)?;
            let mut s = String::new();
            for r in &out.table {
                s += &format!("{:14} d={:<5} expressiveness {:.3}  MRR {:.4}\n", r.method.as_str(), r.d, r.expressiveness, r.mrr);
            }
            Ok(s)
        }
        Command::Correlate { common, metrics } => {
            let mut o = common.overrides()?;
            o.metrics = metrics.clone();
            let out = cmd_correlate(&RunConfig::load(&common.config, &o)?)?;
            let mut s = String::new();
            for t in &out.tasks {
                s += &format!("{:16} r = {:.4} over {} models\n", t.task, t.model_coherence_score, t.models.len());
            }
            Ok(s)
        }
    }
}
