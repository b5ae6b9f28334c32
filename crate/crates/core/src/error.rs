use thiserror::Error;

/// Last iterate carried by a non-convergence error, stored in `f64`
/// row-major order so the error type stays independent of the scalar type.
#[derive(Debug, Clone, PartialEq)]
pub struct Iterate {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Error)]
pub enum MinPenError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("predictor column {column} is constant and cannot be standardized")]
    DegenerateColumn { column: usize },

    #[error("fold {fold} has a constant predictor column {column} in its training part")]
    DegenerateFold { fold: usize, column: usize },

    #[error("enumerating relation graphs needs 3^{pairs} candidates, above the cap of 3^{cap}")]
    EnumerationCap { pairs: usize, cap: usize },

    #[error("{stage} did not converge after {iterations} iterations (last change {last_change:e})")]
    NotConverged {
        stage: &'static str,
        iterations: usize,
        last_change: f64,
        last_iterate: Box<Iterate>,
    },

    #[error("IRLS step could not decrease the objective after {halvings} step halvings")]
    Divergence { halvings: usize },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("selection event is inconsistent with the observed response: {0}")]
    InconsistentEvent(String),

    #[error("truncation interval is empty (lower {lower}, upper {upper})")]
    DegenerateTruncation { lower: f64, upper: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, MinPenError>;
