use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("certificate invalid: {inequality} violated at probe {probe} (lhs {lhs:.6e} > rhs {rhs:.6e})")]
    CertificateInvalid {
        inequality: &'static str,
        probe: usize,
        lhs: f64,
        rhs: f64,
    },

    #[error("non-finite update at step {step}")]
    NonFinite { step: usize },

    #[error("reference solve did not converge: gradient norm {grad_norm:.3e} after {iterations} iterations")]
    ReferenceSolve { grad_norm: f64, iterations: usize },

    #[error("idx parse error at byte {offset}: {message}")]
    Idx { offset: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}
