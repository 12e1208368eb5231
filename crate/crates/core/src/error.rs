use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("pole of the Gamma function at order {0}")]
    Pole(f64),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("step size underflow at s = {at}: tolerance {tol} unreachable")]
    StepFailure { at: f64, tol: f64 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("ray failed to escape within |t| <= {cap}")]
    HorizonExceeded { cap: f64 },
    #[error("linear solve failed at lambda = {lambda}: pivot {pivot:e}, scale {scale:e}")]
    SingularBlock { lambda: f64, pivot: f64, scale: f64 },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
