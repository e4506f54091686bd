use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("empty tree after preprocessing")]
    EmptyTree,

    #[error("malformed tree: {0}")]
    MalformedTree(String),

    #[error("grammar error: {0}")]
    Grammar(String),

    #[error("production not in grammar: {0}")]
    UnknownProduction(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("sentence {index}: {message}")]
    Mismatch { index: usize, message: String },

    #[error("{path}:{line}: {message}")]
    Format {
        path: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
