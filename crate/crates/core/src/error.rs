use thiserror::Error;

/// Location-tagged parse failure in a text document.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("line {line}, field '{field}': {message}")]
pub struct ParseError {
    pub line: usize,
    pub field: String,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum FeederError {
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),
    #[error("invalid feeder: {0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Feeder(#[from] FeederError),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("instance too large for exhaustive enumeration: {0}")]
    TooLarge(String),
    #[error("energized topology is not a rooted forest: {0}")]
    Topology(String),
    #[error("no feasible plan: {0}")]
    Infeasible(String),
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("malformed input: {0}")]
    Format(String),
    #[error("cannot access {path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
