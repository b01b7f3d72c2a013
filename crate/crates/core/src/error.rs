use std::path::PathBuf;

use crate::Block;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("line {line}: bad {field}: {message}")]
    Parse {
        line: usize,
        field: &'static str,
        message: String,
    },

    #[error("observer {observer}: timestamp decreases at position {position} ({previous} > {current})")]
    Unordered {
        observer: String,
        position: usize,
        previous: i64,
        current: i64,
    },

    #[error("block {0}: observations are not time ordered")]
    UnorderedBlock(Block),

    #[error("insufficient data: {0}")]
    Insufficient(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config: {0}")]
    Config(String),

    #[error("missing input {}: {reason}", path.display())]
    MissingInput { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, field: &'static str, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            field,
            message: message.into(),
        }
    }
}
