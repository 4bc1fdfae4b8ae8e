use thiserror::Error;

#[derive(Debug, Error)]
pub enum TiltwingError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("{what} out of range: {value} not in [{min}, {max}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("non-finite input in {0}")]
    NonFinite(&'static str),

    #[error("allocation saturated: {0}")]
    Saturated(String),

    #[error("simulation diverged at t = {t:.3} s: {reason}")]
    Diverged { t: f64, reason: String },

    #[error("fit failed: {0}")]
    FitFailed(String),

    #[error("ill-conditioned fit: {0}")]
    IllConditioned(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, TiltwingError>;
