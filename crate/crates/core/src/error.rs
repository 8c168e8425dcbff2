use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = AlignError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum AlignError {
    #[error("malformed XML: {0}")]
    MalformedXml(String),

    #[error("unresolved entity IRI `{0}`")]
    UnresolvedEntity(String),

    #[error("ontology pair mismatch: expected {expected}, found {found}")]
    PairMismatch { expected: String, found: String },

    #[error("token limit exceeded: {needed} tokens needed, {available} available ({context})")]
    TokenLimitExceeded {
        needed: usize,
        available: usize,
        context: String,
    },

    #[error("invalid token budget: {0}")]
    InvalidBudget(String),

    #[error("unknown prompt strategy `{0}`")]
    UnknownStrategy(String),

    #[error("cannot average an empty result list")]
    EmptyInput,

    #[error(transparent)]
    Backend(#[from] BackendError),

    #[error("corpus missing at {0}")]
    CorpusMissing(PathBuf),

    #[error("corpus fetch failed: {0}")]
    FetchFailed(String),

    #[error("corpus layout invalid, missing: {}", .0.join(", "))]
    LayoutInvalid(Vec<String>),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl AlignError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AlignError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn is_token_limit(&self) -> bool {
        matches!(self, AlignError::TokenLimitExceeded { .. })
    }
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("network error after {attempts} attempt(s): {message}")]
    Network { attempts: u32, message: String },

    #[error("backend refused request with status {status}: {body}")]
    Refused { status: u16, body: String },

    #[error("malformed backend response: {0}")]
    BadResponse(String),

    #[error("cache I/O error: {0}")]
    Cache(String),

    #[error("invalid backend configuration: {0}")]
    Config(String),
}
