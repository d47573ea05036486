use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SqgError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("padding factor {padding} aliases the cubic nonlinearity (need >= 2)")]
    Aliasing { padding: usize },

    #[error("solution diverged at t = {time}: {reason}")]
    Divergence { time: f64, reason: String },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("estimation error: {0}")]
    Estimation(String),

    #[error("quadrature error: {0}")]
    Quadrature(String),
}

pub type Result<T> = std::result::Result<T, SqgError>;
