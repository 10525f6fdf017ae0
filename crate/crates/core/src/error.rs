use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("effect stream is empty")]
    EmptyStream,
    #[error("sigma must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error("estimate for period {period} is not finite")]
    NonFiniteEstimate { period: usize },
    #[error("stream covers {actual} periods but the horizon is {expected}")]
    HorizonMismatch { expected: usize, actual: usize },
    #[error("interim day {interim} leaves nothing to predict before horizon {horizon}")]
    NothingToPredict { interim: usize, horizon: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("cannot compare statistic `{observed}` with `{replicated}`")]
    InvalidComparison {
        observed: String,
        replicated: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}
