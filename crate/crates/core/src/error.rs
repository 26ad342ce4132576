use thiserror::Error;

use crate::types::ContextLabel;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid outcome {0}: expected -1 or 1")]
    InvalidOutcome(i64),

    #[error("invalid context ({0},{1}): indices must be 1 or 2")]
    InvalidContext(i64, i64),

    #[error("context {context}: invalid probability {value}")]
    InvalidProbability { context: ContextLabel, value: f64 },

    #[error("context {context}: probabilities sum to {sum}, expected 1")]
    NotNormalized { context: ContextLabel, sum: f64 },

    #[error("context {context}: statistics are not realizable (cell {cell} = {value})")]
    InfeasibleStats {
        context: ContextLabel,
        cell: &'static str,
        value: f64,
    },

    #[error("context {0} appears more than once")]
    DuplicateContext(ContextLabel),

    #[error("context {0} has no trials")]
    MissingContext(ContextLabel),

    #[error("signaling injection is infeasible: {0}")]
    InfeasibleInjection(String),

    #[error("invalid generator spec: {0}")]
    InvalidGenerator(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed linear program: {0}")]
    MalformedLp(String),

    #[error("simplex hit the iteration cap of {cap} (last objective {objective})")]
    SolverFailure { cap: usize, objective: f64 },

    #[error("line {line}: {message}")]
    Csv { line: u64, message: String },

    #[error("invalid system document: {0}")]
    SystemFormat(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
