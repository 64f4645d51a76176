use std::path::PathBuf;

use crate::labels::LabelMode;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("line {line}, token {token}: {reason}")]
    MalformedToken {
        line: usize,
        token: usize,
        reason: String,
    },

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("invalid {kind} {value:?}: {reason}")]
    InvalidValue {
        kind: &'static str,
        value: String,
        reason: &'static str,
    },

    #[error("ill-formed tag sequence at position {0}")]
    IllFormedTags(usize),

    #[error("split sizes do not add up: {n_train}+{n_dev} ≠ {total}")]
    SplitMismatch {
        n_train: usize,
        n_dev: usize,
        total: usize,
    },

    #[error("no feasible path")]
    NoFeasiblePath,

    #[error("empty training set")]
    EmptyTrainingSet,

    #[error("label {0:?} is not in the tag inventory")]
    UnknownLabel(String),

    #[error("corrupt model file: {0}")]
    CorruptModel(String),

    #[error("model format version mismatch: file has version {found}, expected {expected}")]
    VersionMismatch { found: String, expected: u32 },

    #[error("label mode mismatch: expected {expected}, got {found}")]
    ModeMismatch { expected: LabelMode, found: LabelMode },

    #[error("sentence {index}: {reason}")]
    SentenceMismatch { index: usize, reason: String },

    #[error("timer resolution insufficient (enlarge the corpus)")]
    TimerResolution,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }
}
