use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported exponent p = {0} (only 1 and 2 are supported)")]
    UnsupportedExponent(f64),

    #[error("incompatible spans: {0}")]
    IncompatibleSpans(String),

    #[error("interval [{lo}, {hi}] lies outside the representation span [{span_lo}, {span_hi}]")]
    IntervalOutsideSpan {
        lo: f64,
        hi: f64,
        span_lo: f64,
        span_hi: f64,
    },

    #[error("non-finite sample encountered at x = {0}")]
    NonFinite(f64),

    #[error("no sign change of the boundary function in [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("mismatched trajectory kinds: bracket needs a direct and an adjoint trajectory")]
    MismatchedKinds,

    #[error("mesh does not match representation: {0}")]
    MeshMismatch(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("singular factorization at pivot {0}")]
    Singular(usize),

    #[error("eigensolver did not converge: {0}")]
    NoConvergence(String),

    #[error("unknown potential '{0}'")]
    UnknownPotential(String),

    #[error("missing parameter '{param}' for potential '{name}'")]
    MissingParam { name: String, param: String },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: u64,
        msg: String,
    },

    #[error("config error at {field}: {msg}")]
    Config { field: String, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
