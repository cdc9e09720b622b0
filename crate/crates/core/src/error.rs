use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("invalid prior parameters: {0}")]
    InvalidPrior(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found} ({what})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("golden-section bracket failure: {0}")]
    Bracket(String),

    #[error("power iteration did not converge after {iterations} iterations (last estimate {estimate})")]
    PowerIteration { iterations: usize, estimate: f64 },

    #[error("step size gamma = {gamma} violates 4 gamma L <= 1 (L = {lipschitz})")]
    StepSize { gamma: f64, lipschitz: f64 },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(&'static str),

    #[error("lasso solver reached {iterations} iterations without meeting tolerance")]
    LassoNotConverged { iterations: usize, beta: Vec<f64> },

    #[error("saturated fit: support size {support} is not below sample size {n}")]
    SaturatedFit { support: usize, n: usize },

    #[error("unsupported problem size: {0}")]
    Unsupported(String),

    #[error("quadrature grid leaks {leak:.3e} of its mass at the boundary")]
    GridLeakage { leak: f64 },

    #[error("empty trace")]
    EmptyTrace,

    #[error("degenerate series: {0}")]
    Degenerate(&'static str),

    #[error("csv error at line {line}: {msg}")]
    Csv { line: u64, msg: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_finite(what: &'static str, xs: &[f64]) -> Result<()> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

pub(crate) fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            found,
        })
    }
}
