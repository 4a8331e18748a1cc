use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("training data error: {0}")]
    TrainingData(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    /// The total importance of a weighted set is zero, so a normalized error is undefined.
    #[error("weighted error undefined: total weight is zero")]
    UndefinedWeightedError,

    /// An adversary or referee broke the contract declared for it.
    #[error("harness fault: {0}")]
    HarnessFault(String),

    #[error("search limit exceeded: explored {explored} assignments, cap is {cap}")]
    SearchLimit { explored: u64, cap: u64 },

    #[error("model format error: {0}")]
    Format(String),

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
