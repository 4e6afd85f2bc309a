//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    /// Iterative solver hit its iteration cap before meeting the tolerance.
    #[error("solver diverged after {iterations} iterations (relative residual {residual:.3e})")]
    SolverDivergence { iterations: usize, residual: f64 },

    #[error("numerical failure: non-finite values in field `{field}` at step {step}")]
    NumericalFailure { field: &'static str, step: usize },

    #[error("degenerate crack: initial damage integral is zero")]
    DegenerateCrack,

    #[error("degenerate labels: training data contains a single class")]
    DegenerateLabels,

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("training diverged: {0}")]
    TrainingDivergence(String),

    #[error("corrupt model ({section}): {detail}")]
    CorruptModel { section: String, detail: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
