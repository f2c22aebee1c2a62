use alloc::string::String;

/// Errors raised by the solver and the analysis routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("history time s = {s} outside [-{tau}, 0]")]
    HistoryRange { s: f64, tau: f64 },

    #[error("tabulated data has {len} samples, at least {min} required")]
    TooFewSamples { len: usize, min: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-contiguous push: expected t = {expected}, got t = {got}")]
    Sequencing { expected: f64, got: f64 },

    #[error(
        "delayed time {requested} not covered by history (oldest stamp {oldest}, newest {newest})"
    )]
    Coverage {
        requested: f64,
        oldest: f64,
        newest: f64,
    },

    #[error("numerical breakdown: zero pivot in column {column}")]
    SingularMatrix { column: usize },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("non-positive value {value} at t = {t} inside the fit window")]
    NonPositiveInWindow { t: f64, value: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;
