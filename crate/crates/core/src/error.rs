//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by any module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A document failed to parse (calibration files, circuit pools, configs).
    #[error("parse error: {0}")]
    Parse(String),

    /// A domain invariant was violated by input data.
    #[error("invariant violation: {0}")]
    Invariant(String),

    /// A request has no solution (e.g. no connected subgraph survives the
    /// exclusions).
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// Mismatched dimensions between operands.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A simulation exceeded its configured qubit limit.
    #[error("simulation limit: {0}")]
    SimLimit(String),

    /// Numerical failure (NaN loss, undefined normalization, ...).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Failure attributed to a pipeline stage; wraps the underlying cause.
    #[error("stage '{stage}' failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Tag an error with the pipeline stage it occurred in.
    pub fn in_stage(self, stage: &str) -> Self {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
