use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("power iteration did not converge after {iterations} iterations (last estimate {estimate})")]
    NonConvergence { iterations: usize, estimate: f64 },

    #[error("reference solver hit its cap of {iterations} iterations with gradient norm {residual:e}")]
    SolverCap { iterations: usize, residual: f64 },

    #[error("invariant violated: {quantity} = {value:e} exceeds tolerance {tolerance:e}")]
    Invariant { quantity: &'static str, value: f64, tolerance: f64 },

    #[error("convexity violated: Bregman distance {0:e} is negative")]
    Convexity(f64),

    #[error("value {0:e} is outside the range of the 9-bit natural encoding")]
    OutOfRange(f64),

    #[error("malformed bit stream: {0}")]
    Codec(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
