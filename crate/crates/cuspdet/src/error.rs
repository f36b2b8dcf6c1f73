use thiserror::Error;

/// Errors produced by the numerical routines and the spec/CLI layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid operator spec: {0}")]
    Spec(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("design matrix is rank deficient (condition number {condition:.3e})")]
    RankDeficient { condition: f64 },

    #[error("too few samples: got {got}, need at least {need}")]
    TooFewSamples { got: usize, need: usize },

    #[error("fit residual {residual:.3e} exceeds tolerance {tol:.3e} beyond the split point")]
    TailResidual { residual: f64, tol: f64 },

    #[error("quadrature did not converge: estimated error {est:.3e} > tolerance {tol:.3e}")]
    QuadratureConvergence { est: f64, tol: f64 },

    #[error("spectral parameter too close to an eigenvalue: |Wronskian| = {wronskian:.3e}")]
    NearEigenvalue { wronskian: f64 },

    #[error("truncation radius too small: {msg}")]
    Truncation { msg: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub fn spec(msg: impl Into<String>) -> Self {
        Error::Spec(msg.into())
    }
}
