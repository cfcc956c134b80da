use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("resource limit exceeded: {what} = {value} (ceiling {ceiling})")]
    ResourceLimit {
        what: &'static str,
        value: u64,
        ceiling: u64,
    },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("construction failed: {0}")]
    Construction(String),

    #[error("quadrature did not converge: estimate {estimate}, error {error} > tolerance {tolerance}")]
    Convergence {
        estimate: f64,
        error: f64,
        tolerance: f64,
    },

    #[error("insufficient data: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
