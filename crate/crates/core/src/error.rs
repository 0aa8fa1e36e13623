use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },

    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("token id {id} at position {position} is outside the vocabulary (size {vocab_size})")]
    OutOfVocabulary {
        id: u32,
        position: usize,
        vocab_size: usize,
    },

    #[error("sequence length {actual} does not match model length {expected}")]
    SequenceLength { expected: usize, actual: usize },

    #[error("class index {class} out of range for {num_classes} classes")]
    ClassOutOfRange { class: usize, num_classes: usize },

    #[error("exact Shapley enumeration supports at most {cap} features, got {n}")]
    TooManyFeatures { n: usize, cap: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("instance mismatch: {0}")]
    InstanceMismatch(String),

    #[error("explaining instance {id} failed: {source}")]
    Instance {
        id: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("training diverged at epoch {epoch} (loss {loss})")]
    Diverged { epoch: usize, loss: f64 },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }

    /// True for failures caused by bad user input (files, flags, shapes of
    /// supplied data) as opposed to numerical or internal failures.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::Instance { source, .. } => source.is_input_error(),
            Error::NonFinite { .. } | Error::Diverged { .. } => false,
            _ => true,
        }
    }
}
