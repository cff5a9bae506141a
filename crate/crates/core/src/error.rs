use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numerical singularity: {0}")]
    Singularity(String),

    #[error(
        "integrator did not converge at f = {frequency_hz} Hz: error estimate {error_estimate:e} \
         above tolerance {tolerance:e}"
    )]
    NonConvergence {
        frequency_hz: f64,
        error_estimate: f64,
        tolerance: f64,
    },

    #[error("receiver {receiver} at f = {frequency_hz} Hz: {source}")]
    AtReceiver {
        receiver: usize,
        frequency_hz: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("f = {frequency_hz} Hz: {source}")]
    AtFrequency {
        frequency_hz: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("singular value decomposition failed: {0}")]
    Svd(String),

    #[error("kernel diverged: {0}")]
    Divergence(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn at_frequency(self, frequency_hz: f64) -> Self {
        Error::AtFrequency {
            frequency_hz,
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
