use thiserror::Error;

/// Errors produced by the calibration engine.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration: bad sizes, out-of-range hyperparameters.
    #[error("configuration error: {0}")]
    Config(String),

    /// Malformed or inconsistent input data.
    #[error("data error: {0}")]
    Data(String),

    /// A value outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The real part of a characteristic exponent exceeded the overflow cap.
    #[error("divergent density: characteristic exponent real part {exponent} exceeds {cap}")]
    DivergentDensity { exponent: f64, cap: f64 },

    /// Rejection sampler accepted too few proposals.
    #[error("envelope error: acceptance rate {rate} over {proposals} proposals")]
    Envelope { rate: f64, proposals: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    /// True for failures caused by the numerics rather than by the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::DivergentDensity { .. } | Error::Envelope { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
