use thiserror::Error;

/// Unified error type for the whole toolkit.
///
/// Numerical routines return `BlowUp` with the last time at which the state
/// was still finite; everything else is a contract violation detected before
/// or while running.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("invalid discretization: {0}")]
    InvalidDiscretization(String),

    #[error("time nodes mismatch: {0}")]
    NodeMismatch(String),

    #[error("field contains non-finite values")]
    NonFinite,

    #[error("numerical blow-up, last valid time t = {t}")]
    BlowUp { t: f64 },

    #[error("control not admissible: {0}")]
    Inadmissible(String),

    #[error("unsupported mode: {0}")]
    Unsupported(String),

    #[error("invalid norm spec: {0}")]
    NormSpec(String),

    #[error("config error at {path}: {msg}")]
    Config { path: String, msg: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
