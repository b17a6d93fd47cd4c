use thiserror::Error;

/// Errors raised by model construction, sampling and inference routines.
#[derive(Debug, Error)]
pub enum SpectraError {
    #[error("ordering violated: {0}")]
    Ordering(String),
    #[error("factor is not orthogonal: {0}")]
    Orthogonality(String),
    #[error("argument outside domain: {0}")]
    Domain(String),
    #[error("rank deficient: {0}")]
    Rank(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("fixed point iteration did not converge: {0}")]
    FixedPoint(String),
    #[error("bulk edge not found: {0}")]
    Edge(String),
    #[error("threshold iteration exceeded {0} steps")]
    IterationCap(usize),
    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, SpectraError>;
