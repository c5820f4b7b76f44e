use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A score or argument fell outside its admissible range.
    #[error("domain error: {0}")]
    Domain(String),

    /// Response data does not line up with the questionnaire.
    #[error("data error: {0}")]
    Data(String),

    /// A file could not be parsed. `line` is 1-based when known.
    #[error("{}: parse error{}: {message}", path.display(), line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse {
        path: PathBuf,
        line: Option<usize>,
        message: String,
    },

    /// Model specification text is malformed.
    #[error("model syntax error at line {line}: {message}")]
    Syntax { line: usize, message: String },

    /// The questionnaire or model lacks the structure an operation needs.
    #[error("structural error: {0}")]
    Structural(String),

    #[error("cannot standardize item `{item}`: zero variance")]
    ZeroVariance { item: String },

    #[error("numerical error: {0}")]
    Numerical(String),

    /// A transport call failed; `respondent` and `item` locate the query.
    #[error("transport error (respondent {respondent}, item {item}): {message}")]
    Transport {
        respondent: usize,
        item: String,
        message: String,
    },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(path: impl Into<PathBuf>, line: Option<usize>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
