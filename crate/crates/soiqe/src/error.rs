use std::path::PathBuf;

/// Errors produced by the soiqe pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A precondition on an operation's arguments was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An iterative computation produced a non-finite value.
    #[error("numeric failure at step {step}: {detail}")]
    NumericFailure { step: usize, detail: String },

    /// A serialized artifact (dictionary file, manifest) is malformed.
    #[error("format error: {0}")]
    Format(String),

    /// A correlation is undefined because one input has zero variance.
    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),

    /// No dictionary was configured or the configured file does not exist.
    #[error("missing dictionary: {0}")]
    MissingDictionary(String),

    /// I/O failure, annotated with the path that was being accessed.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Image decode/encode failure.
    #[error("image error on {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
