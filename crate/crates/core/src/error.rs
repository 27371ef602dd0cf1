use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("training failed: {0}")]
    Training(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("numerical degeneracy: {0}")]
    Degenerate(String),

    #[error("setting `{0}` has no spatial oracle")]
    UnsupportedOracle(String),

    #[error("rejection sampler exhausted after {proposals} proposals ({accepted} of {requested} accepted)")]
    SamplerExhausted {
        proposals: usize,
        accepted: usize,
        requested: usize,
    },

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
