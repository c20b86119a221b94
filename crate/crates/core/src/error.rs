use thiserror::Error;

/// Errors produced by the library. Each variant maps to a CLI exit code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid arguments: {0}")]
    Usage(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("resource limit exceeded: {what} needs {required}, cap is {cap}")]
    Resource {
        what: &'static str,
        required: u128,
        cap: u128,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: u64, msg: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
