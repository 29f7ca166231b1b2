use thiserror::Error;

use crate::model::{Item, Itemset};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("item {item} does not occur in transaction {tid}")]
    AbsentItem { item: Item, tid: usize },

    #[error("transaction id {tid} out of range 1..={len}")]
    TidOutOfRange { tid: usize, len: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid itemset: {0}")]
    InvalidItemset(String),

    #[error("invalid thresholds: {0}")]
    InvalidThresholds(String),

    #[error("item universe of {size} exceeds the brute-force limit of {limit}")]
    UniverseTooLarge { size: usize, limit: usize },

    #[error("itemset {0} has no occurrence in the dataset")]
    EmptySupport(Itemset),

    #[error("sensitive itemset {0} is not among the original PHUIs")]
    NotSubset(Itemset),

    #[error("metric {0} is undefined (zero denominator)")]
    UndefinedMetric(&'static str),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{stage}: {inner}")]
    Stage {
        stage: &'static str,
        inner: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn at_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            inner: Box::new(self),
        }
    }

    /// The innermost error, skipping stage tags.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { inner, .. } => inner.root(),
            other => other,
        }
    }
}
