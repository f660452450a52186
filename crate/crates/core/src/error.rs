use std::path::PathBuf;

use thiserror::Error;

use crate::domain::{ModerationAction, OffenseType};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("model used before fit")]
    NotFitted,

    #[error("labels contain a single class")]
    SingleClass,

    #[error("linear system is singular or not positive definite")]
    Singular,

    #[error("action set {actions:?} matches no severity row for {offense}")]
    UnclassifiableActionSet {
        offense: OffenseType,
        actions: Vec<ModerationAction>,
    },

    #[error("degenerate cohort for stratum {stratum}: {reason}")]
    CohortDegenerate { stratum: String, reason: String },

    #[error("propensity score {value} at row {row} is outside the open interval (0, 1)")]
    UnclippedPropensity { row: usize, value: f64 },

    #[error("undefined statistic: {0}")]
    Undefined(String),

    #[error("{stage} failed for {stratum}: {source}")]
    Stage {
        stage: &'static str,
        stratum: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Whether this error stems from the input data rather than from usage.
    pub fn is_data_error(&self) -> bool {
        match self {
            Error::Parse { .. } | Error::Io { .. } | Error::InvalidInput(_) => true,
            Error::Stage { source, .. } => source.is_data_error(),
            _ => false,
        }
    }
}
