use thiserror::Error;

use crate::scalar::Mode;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("argument must be positive, got {0}")]
    NonPositiveArgument(String),

    #[error("rational mode requires integer arguments, got {0}")]
    RationalModeNonInteger(String),

    #[error("invalid precision: {0}")]
    InvalidPrecision(String),

    #[error("scalar mode mismatch: context is {context:?} but values are {values:?}")]
    ModeMismatch { context: Mode, values: Mode },

    #[error("cannot parse scalar `{0}`")]
    Parse(String),

    #[error("inadmissible parameters: {0}")]
    InadmissibleParameters(String),

    #[error("invalid measure data: {0}")]
    InvalidMeasure(String),

    #[error("moment of degree {requested} exceeds the degree budget {budget}")]
    DegreeBudgetExceeded { requested: usize, budget: usize },

    #[error("operation not supported for the {0} family")]
    UnsupportedFamily(&'static str),

    #[error("insufficient truncation: {0}")]
    InsufficientTruncation(String),

    #[error("leading principal minor {index} is singular at Christoffel stage {stage}")]
    SingularMinor { stage: usize, index: usize },

    #[error("leading principal minor {index} is numerically singular at Christoffel stage {stage}")]
    NearSingularMinor { stage: usize, index: usize },

    #[error("index {index} lies outside the valid window of size {window}")]
    IndexOutOfWindow { index: usize, window: usize },

    #[error("window too small: need {needed}, have {available}")]
    WindowTooSmall { needed: usize, available: usize },

    #[error("chain mismatch: {0}")]
    ChainMismatch(String),

    #[error("normalization mismatch: {0}")]
    NormalizationMismatch(String),

    #[error("direct linear system is singular")]
    SingularSystem,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Tags a singular-minor error with the Christoffel stage that produced it.
    pub fn at_stage(self, k: usize) -> Self {
        match self {
            Error::SingularMinor { index, .. } => Error::SingularMinor { stage: k, index },
            Error::NearSingularMinor { index, .. } => Error::NearSingularMinor { stage: k, index },
            other => other,
        }
    }

    pub fn is_singular(&self) -> bool {
        matches!(self, Error::SingularMinor { .. } | Error::NearSingularMinor { .. })
    }
}
