use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A size cap was exceeded. `suggestion` names the cheaper route.
    #[error("resource limit: {what} exceeds cap {cap}; {suggestion}")]
    ResourceLimit {
        what: String,
        cap: usize,
        suggestion: String,
    },

    #[error("power iteration did not converge after {iterations} iterations (last estimate {last_estimate})")]
    NumericalFailure {
        iterations: usize,
        last_estimate: f64,
    },

    #[error("out of domain: {0}")]
    OutOfDomain(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
