use thiserror::Error;

/// Errors produced by the numerical layers and the experiment runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("integral did not converge: value ~ {value:e}, err ~ {err_est:e} ({detail})")]
    NonConvergent {
        value: f64,
        err_est: f64,
        detail: String,
    },
    #[error("integrand returned a non-finite value at {at}")]
    Domain { at: f64 },
    #[error("invalid weight: {0}")]
    InvalidWeight(String),
    #[error("weight is not integrable: {0}")]
    NonIntegrable(String),
    #[error("invalid function: {0}")]
    InvalidFunction(String),
    #[error("radius {r} is outside the truncation-valid range (max {max})")]
    TruncationInvalid { r: f64, max: f64 },
    #[error("bisection failed: {0}")]
    Bisection(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("empty grid")]
    EmptyGrid,
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the command-line interface.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Hypothesis(_) => 2,
            Error::NonConvergent { .. } | Error::Domain { .. } => 3,
            _ => 1,
        }
    }
}
