use thiserror::Error;

/// Errors raised by the copula, vine and estimation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PvcError {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("non-finite value at {location}: {detail}")]
    Evaluation { location: String, detail: String },

    #[error("target {target} outside bracket [{lo}, {hi}]")]
    Bracket { target: f64, lo: f64, hi: f64 },

    #[error("no convergence after {iterations} iterations: {detail}")]
    Convergence { iterations: usize, detail: String },

    #[error("vine structure error: {0}")]
    Structure(String),

    #[error("edge ({tree}, {index}): {source}")]
    Edge {
        tree: usize,
        index: usize,
        #[source]
        source: Box<PvcError>,
    },

    #[error("row {row}: {source}")]
    Row {
        row: usize,
        #[source]
        source: Box<PvcError>,
    },

    #[error("no closed form available: {0}")]
    NoClosedForm(String),

    #[error("config error: {0}")]
    Config(String),
}

impl PvcError {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        PvcError::Parameter(msg.into())
    }

    pub(crate) fn eval(location: impl Into<String>, detail: impl Into<String>) -> Self {
        PvcError::Evaluation {
            location: location.into(),
            detail: detail.into(),
        }
    }

    /// Attach a 1-based D-vine edge label `(tree, index)`.
    pub(crate) fn at_edge(self, tree: usize, index: usize) -> Self {
        PvcError::Edge {
            tree,
            index,
            source: Box::new(self),
        }
    }

    pub(crate) fn at_row(self, row: usize) -> Self {
        PvcError::Row {
            row,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, PvcError>;
