use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{origin}:{line}:{col}: parse error: expected {expected}")]
    Parse { origin: String, line: usize, col: usize, expected: String },

    #[error("sort error: {0}")]
    Sort(String),

    #[error("duplicate location {0}")]
    DuplicateLocation(u32),

    #[error("{}unknown variable `{name}`", .at.as_ref().map(|a| format!("{a}: ")).unwrap_or_default())]
    UnknownVariable { name: String, at: Option<String> },

    #[error("invariant `{name}` declares {declared} index variables but its body uses {used}")]
    Arity { name: String, declared: usize, used: usize },

    #[error("support `{0}` is not a node of the proof graph")]
    DanglingSupportName(String),

    #[error("unknown invariant `{0}`")]
    UnknownInvariant(String),

    #[error("system is not fully symmetric: {0}")]
    NotSymmetric(String),

    #[error("unsupported theory: {0}")]
    UnsupportedTheory(String),

    #[error("solver `{0}` not found")]
    SolverNotFound(String),

    #[error("solver protocol error: {0}")]
    Protocol(String),

    #[error("state explosion: more than {0} reachable states")]
    StateExplosion(usize),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn unknown_variable(name: impl Into<String>) -> Self {
        Error::UnknownVariable { name: name.into(), at: None }
    }

    pub fn parse(origin: &str, line: usize, col: usize, expected: impl Into<String>) -> Self {
        Error::Parse { origin: origin.to_string(), line, col, expected: expected.into() }
    }
}
