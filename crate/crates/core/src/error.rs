use thiserror::Error;

use crate::milp::SolverStatus;

pub type Result<T> = std::result::Result<T, HzError>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum HzError {
    /// Operand dimensions do not line up.
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// The operation needs a nonempty set.
    #[error("{0}: set is empty")]
    Empty(&'static str),

    #[error("capacity exceeded: {needed} binary patterns requested, cap is {cap}; reduce the set first")]
    Capacity { needed: u128, cap: u128 },

    #[error("set too large: a {rows}x{cols} constraint matrix exceeds the dense size limit; reduce the set first")]
    TooLarge { rows: usize, cols: usize },

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("zero pivot at constraint {row}, generator {col}")]
    ZeroPivot { row: usize, col: usize },

    #[error("ill-conditioned pivot {value:e} at constraint {row}, generator {col}")]
    Conditioning { row: usize, col: usize, value: f64 },

    /// Generator alignment could not be derived from the observed binary counts.
    #[error("structural error: {0}")]
    Structural(String),

    #[error("solver returned {status:?} while computing {context}")]
    Solver {
        status: SolverStatus,
        context: &'static str,
    },

    #[error("invalid document: {0}")]
    Document(String),
}

impl HzError {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        HzError::Shape {
            op,
            detail: detail.into(),
        }
    }
}
