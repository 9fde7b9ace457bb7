use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("state is not normalized (norm {0:.6e})")]
    NotNormalized(f64),

    #[error("argument {x} is outside the tabulated range [{lo}, {hi}]")]
    OutOfRange { x: f64, lo: f64, hi: f64 },

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0} has no analytic continuation into the complex strip")]
    NotAnalytic(String),

    #[error("Fourier coefficients did not converge after {doublings} doublings (last change {change:.3e})")]
    NonConvergent { doublings: usize, change: f64 },

    #[error("polynomial pair is inconsistent at layer {layer}: discarded coefficient {residual:.3e}")]
    InconsistentPair { layer: usize, residual: f64 },

    #[error("normalization drift {drift:.3e} at layer {layer}")]
    Drift { layer: usize, drift: f64 },

    #[error("completion failed: {0}")]
    Completion(String),

    #[error("Laurent degree {degree} exceeds the supported maximum {max}")]
    DegreeTooLarge { degree: usize, max: usize },

    #[error("no degree up to {max_degree} reaches sup-norm error {epsilon:e}; consider a phase window or a larger maximum degree")]
    DegreeNotReached { epsilon: f64, max_degree: usize },

    #[error("refinement objective is not finite: {0}")]
    NonFiniteObjective(String),

    #[error("optimizer failed: {0}")]
    Optimizer(String),

    #[error("herald failed at instruction {step} (probability {probability:.6})")]
    HeraldAbort { step: usize, probability: f64 },

    #[error("invalid circuit: {0}")]
    Circuit(String),

    #[error("herald at instruction {step} has zero probability")]
    ZeroProbabilityBranch { step: usize },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
