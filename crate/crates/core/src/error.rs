use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("format error: {0}")]
    Format(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("corrupt stream: {0}")]
    Corruption(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value in {layer}: {detail}")]
    Numeric { layer: String, detail: String },

    #[error("manifest schema error: {0}")]
    Schema(String),

    #[error("duplicate utterance id `{0}`")]
    Duplicate(String),

    #[error("dataset entry `{entry}`: {source}")]
    Dataset {
        entry: String,
        #[source]
        source: Box<Error>,
    },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn numeric(layer: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Numeric {
            layer: layer.into(),
            detail: detail.into(),
        }
    }

    pub(crate) fn for_entry(entry: impl Into<String>, source: Error) -> Self {
        Error::Dataset {
            entry: entry.into(),
            source: Box::new(source),
        }
    }

    /// Process exit status for this error: 1 usage/config, 2 data, 3 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Numeric { .. } | Error::Degenerate(_) => 3,
            Error::Dataset { source, .. } => match source.as_ref() {
                Error::Numeric { .. } => 3,
                _ => 2,
            },
            _ => 2,
        }
    }
}
