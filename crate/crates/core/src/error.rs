use thiserror::Error;

/// Errors raised by the modelling pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("misaligned inputs: {0}")]
    Misaligned(String),

    #[error("zero variance: {0}")]
    ZeroVariance(String),

    #[error("month {month} has no observations")]
    EmptyMonth { month: u32 },

    #[error("insufficient exceedances: {k} retained, at least {required} needed")]
    InsufficientExceedances { k: usize, required: usize },

    #[error("optimizer did not converge: {0}")]
    NonConvergence(String),

    #[error("flat likelihood: {0}")]
    FlatLikelihood(String),

    #[error("bracket not found for q={q} at x={x} after {steps} growth steps")]
    BracketNotFound { q: f64, x: f64, steps: usize },

    #[error("non-monotone conditional CDF at x={x}: F({y_lo})={f_lo} > F({y_hi})={f_hi}")]
    NonMonotone {
        x: f64,
        y_lo: f64,
        y_hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("quadrature refinement check failed: {coarse} vs {fine} (rel diff {rel_diff:e})")]
    Quadrature { coarse: f64, fine: f64, rel_diff: f64 },

    #[error("manifold cell (q={q}, x={x}) failed: {source}")]
    Cell {
        q: f64,
        x: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Coarse classification used to pick process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Data,
    Numerical,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::NonConvergence(_)
            | Error::FlatLikelihood(_)
            | Error::BracketNotFound { .. }
            | Error::NonMonotone { .. }
            | Error::NonFinite(_)
            | Error::Quadrature { .. } => ErrorKind::Numerical,
            Error::Cell { source, .. } => source.kind(),
            _ => ErrorKind::Data,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
