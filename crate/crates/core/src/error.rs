use std::path::PathBuf;

use crate::dataset::StageCounts;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unknown language `{0}`")]
    UnknownLanguage(String),

    #[error("invalid language profile `{id}`: {reason}")]
    InvalidProfile { id: String, reason: String },

    #[error("cannot split empty file `{0}`")]
    EmptyFile(String),

    #[error("no split candidate within the middle length cap for `{0}`")]
    NoSplitCandidate(String),

    #[error("token budget {budget} is below the minimum of {required} for this prompt")]
    BudgetTooSmall { budget: usize, required: usize },

    #[error("invalid sentinels: {0}")]
    InvalidSentinels(String),

    #[error("path `{0}` is not part of the repository snapshot")]
    UnknownPath(String),

    #[error("invalid sliding window: window={window}, stride={stride}")]
    InvalidWindow { window: usize, stride: usize },

    #[error("quota {quota} exceeds pool of {pool} examples")]
    QuotaExceedsPool { quota: usize, pool: usize },

    #[error("judge transport failure: {0}")]
    Judge(String),

    #[error("no examples survived the pipeline ({0})")]
    NoSurvivors(StageCounts),

    #[error("invalid KK threshold {0}, expected 0 < tau <= 1")]
    InvalidTau(f64),

    #[error("{0} must not be empty")]
    EmptyInput(&'static str),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("backend error (retryable: {retryable}): {message}")]
    Backend { retryable: bool, message: String },

    #[error("no replayed completion for example `{0}`")]
    ReplayMiss(String),

    #[error("{failed} of {total} examples failed")]
    TooManyFailures { failed: usize, total: usize },

    #[error("invalid config: {0}")]
    Config(String),

    // the cause is part of the message, not a chained source, so `{:#}`
    // does not print it twice
    #[error("{path}: {cause}")]
    Io {
        path: PathBuf,
        cause: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            cause: source,
        }
    }

    pub fn is_retryable(&self) -> bool {
        matches!(
            self,
            Error::Backend {
                retryable: true,
                ..
            }
        )
    }
}
