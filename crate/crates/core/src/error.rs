//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, EvalError>;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed json in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    /// Ground-truth schema or invariant violation, with enough location
    /// information to find the offending annotation.
    #[error("schema violation on page {page_id}{}: {message}", block_id.as_deref().map(|b| format!(", block {b}")).unwrap_or_default())]
    Schema {
        page_id: String,
        block_id: Option<String>,
        message: String,
    },

    #[error("malformed markdown table at line {line}: {message}")]
    MalformedTable { line: usize, message: String },

    #[error("no <table> element found in ground-truth html")]
    NoTableElement,

    #[error("block {block_id} has a reading-order index but no content payload")]
    MissingContent { block_id: String },

    #[error("detection references unknown page id {0}")]
    UnknownPage(String),

    #[error("unknown attribute selector {0:?}")]
    UnknownAttribute(String),

    #[error("unknown report format {0:?}")]
    UnknownFormat(String),

    #[error("{0}")]
    Invalid(String),
}

impl EvalError {
    pub fn schema(page_id: impl Into<String>, block_id: Option<&str>, message: impl Into<String>) -> Self {
        EvalError::Schema {
            page_id: page_id.into(),
            block_id: block_id.map(str::to_owned),
            message: message.into(),
        }
    }
}
