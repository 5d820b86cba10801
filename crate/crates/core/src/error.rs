use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, BstcError>;

#[derive(Debug, Error)]
pub enum BstcError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{context}: {message}")]
    Parse { context: String, message: String },
    #[error("empty input: {0}")]
    Empty(String),
    #[error("incomplete panel: no row for unit {unit} at time {time}")]
    IncompletePanel { unit: String, time: String },
    #[error("duplicate panel row for unit {unit} at time {time}")]
    DuplicateRow { unit: String, time: String },
    #[error("unknown unit id {0}")]
    UnknownUnit(String),
    #[error("self-loop on unit {0}")]
    SelfLoop(String),
    #[error("zero variance in variable {0}")]
    ZeroVariance(String),
    #[error("constant input: spatial statistic undefined")]
    ConstantInput,
    #[error("graph has no edges")]
    EmptyGraph,
    #[error("singular ICAR precision: rho must lie in [0, 1), got {0}")]
    SingularPrecision(f64),
    #[error("invalid value for {name}: {message}")]
    InvalidParameter { name: String, message: String },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix not positive definite (pivot {pivot} = {value})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("non-canonical allocation labels: {0}")]
    NonCanonical(String),
    #[error("numerical failure at iteration {iteration}: {source}")]
    Numerical {
        iteration: usize,
        #[source]
        source: Box<BstcError>,
    },
}

impl BstcError {
    pub(crate) fn invalid(name: &str, message: impl Into<String>) -> Self {
        BstcError::InvalidParameter {
            name: name.to_string(),
            message: message.into(),
        }
    }

    pub(crate) fn parse(context: impl Into<String>, message: impl Into<String>) -> Self {
        BstcError::Parse {
            context: context.into(),
            message: message.into(),
        }
    }

    /// True for failures of the numerical kind (factorization, sampler aborts)
    /// as opposed to input validation.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            BstcError::NotPositiveDefinite { .. } | BstcError::Numerical { .. }
        )
    }
}
