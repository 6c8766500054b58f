use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("hbar must be positive")]
    NonPositiveHbar,
    #[error("size not a power of two: {0}")]
    NotPowerOfTwo(usize),
    #[error("empty span [{0}, {1}]")]
    EmptySpan(f64, f64),
    #[error("grid mismatch")]
    GridMismatch,
    #[error("representation mismatch: expected {0}")]
    Representation(&'static str),
    #[error("deconvolution ill-posed for this field")]
    IllPosed,
    #[error("inadmissible smoother: {0}")]
    Inadmissible(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("non-Hermitian ordered operator, offending term {0}")]
    NonHermitian(String),
    #[error("insufficient resolution: {0}")]
    Resolution(String),
    #[error("numerical consistency: {0}")]
    Inconsistent(String),
    #[error("series not converged: {0}")]
    Convergence(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("malformed file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
