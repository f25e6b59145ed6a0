use thiserror::Error;

use crate::jets::JetError;
use crate::lang::{EvalError, ParseError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid chart point: {0}")]
    InvalidPoint(String),
    #[error("metric invalid at point: {0}")]
    MetricInvalid(String),
    #[error("quadrature did not converge: relative change {change:e} after doubling to {nodes} nodes")]
    Quadrature { change: f64, nodes: usize },
    #[error("{0} must be positive, got {1}")]
    NonPositive(&'static str, f64),
    #[error("{0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures caused by a too-small jet order.
    pub fn is_insufficient_order(&self) -> bool {
        matches!(self, Error::Jet(JetError::InsufficientOrder { .. }))
            || matches!(self, Error::Eval(EvalError::Jet(JetError::InsufficientOrder { .. })))
    }
}
