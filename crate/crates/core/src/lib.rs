//! Node coherence rates for interpreting graph node embeddings, plus an
//! evaluation harness for interpretation methods.

pub mod baselines;
pub mod cli;
pub mod embedding;
pub mod error;
pub mod graph;
pub mod ime;
pub mod nci;
pub mod relations;
pub mod rng;
pub mod stats;
pub mod synthetic;

pub use error::{Error, Result};
