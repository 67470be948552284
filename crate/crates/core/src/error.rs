use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("unknown or missing node reference: {0}")]
    Reference(String),

    #[error("invalid graph: {0}")]
    Validation(String),

    #[error("relation {relation} requires {requirement}, which the graph does not carry")]
    Capability {
        relation: String,
        requirement: &'static str,
    },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("weights must sum to 1 (got {0})")]
    Constraint(f64),

    #[error("key mismatch: {0}")]
    Key(String),

    #[error("every query node was skipped for relation {relation}")]
    DegenerateRelation { relation: String },

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("IME cell (target {target}, scored {scored}) failed: {source}")]
    ImeCell {
        target: String,
        scored: String,
        #[source]
        source: Box<Error>,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl AsRef<std::path::Path>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.as_ref().display().to_string(),
            line,
            message: message.into(),
        }
    }

    /// Process exit code: 2 for user/config errors, 1 for numerical or internal failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical(_) | Error::DegenerateRelation { .. } | Error::InsufficientData(_) => 1,
            Error::ImeCell { source, .. } => source.exit_code(),
            _ => 2,
        }
    }
}
