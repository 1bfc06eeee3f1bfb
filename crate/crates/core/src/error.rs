use thiserror::Error;

/// Errors raised by the analysis pipeline.
///
/// Variants are grouped by the kind of failure so callers (the CLI in
/// particular) can map them onto exit codes with [`Error::kind`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown node `{0}`")]
    UnknownNode(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("graph is disconnected: `{first}` and `{second}` lie in different components")]
    Disconnected { first: String, second: String },

    #[error("node `{0}` has no neighbors")]
    IsolatedNode(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("nodes `{0}` and `{1}` are not mutually reachable")]
    Unreachable(String, String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("ticker `{ticker}` has zero variance in window {window}")]
    ZeroVariance { ticker: String, window: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("window {index}: {source}")]
    Window {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse classification used for exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Numerical,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Window { source, .. } => source.kind(),
            Error::InvalidParameter(_) => ErrorKind::Usage,
            Error::Numerical(_) => ErrorKind::Numerical,
            _ => ErrorKind::Data,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
