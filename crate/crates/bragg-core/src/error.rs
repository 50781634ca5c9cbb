use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("non-finite integrand at node {index} (q = {q})")]
    NonFinite { index: usize, q: f64 },
    #[error("integration failed at lambda = {lambda}: {reason}")]
    Integration { lambda: f64, reason: String },
    #[error("singular working point: {0}")]
    Singular(String),
    #[error("finite-difference derivative not converged (Richardson mismatch {mismatch:e})")]
    Derivative { mismatch: f64 },
    #[error("optimizer failure: {0}")]
    Optimizer(String),
}

impl Error {
    /// True for errors caused by invalid input rather than by numerics.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Domain(_) | Error::Config(_))
    }
}
