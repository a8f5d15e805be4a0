use thiserror::Error;

use crate::market_data::Month;

/// Every failure the library can report. The variant name doubles as the
/// error category printed by the command-line front end.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed series: {0}")]
    MalformedSeries(String),

    #[error("invalid datum at row {row}: {reason}")]
    InvalidDatum { row: usize, reason: String },

    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("date {0} outside series range {1}..={2}")]
    OutOfRange(Month, Month, Month),

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("unsupported degrees of freedom {0} (expected 4)")]
    UnsupportedDof(u32),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("initialization failure: {0}")]
    InitializationFailure(String),

    #[error("quadratic surrogate is not concave at iteration {iteration}")]
    SurrogateNotConcave {
        iteration: usize,
        /// `(alpha, eta, log_likelihood)` for every grid point of the failing iteration.
        grid: Vec<(f64, f64, f64)>,
    },

    #[error("estimate diverged: {0}")]
    DivergedEstimate(String),

    #[error("no admissible backtest window: {0}")]
    EmptyBacktest(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short category name, stable across releases.
    pub fn category(&self) -> &'static str {
        match self {
            Error::MalformedSeries(_) => "MalformedSeries",
            Error::InvalidDatum { .. } => "InvalidDatum",
            Error::InvalidWindow(_) => "InvalidWindow",
            Error::OutOfRange(..) => "OutOfRange",
            Error::DomainError(_) => "DomainError",
            Error::UnsupportedDof(_) => "UnsupportedDof",
            Error::InsufficientData(_) => "InsufficientData",
            Error::InitializationFailure(_) => "InitializationFailure",
            Error::SurrogateNotConcave { .. } => "SurrogateNotConcave",
            Error::DivergedEstimate(_) => "DivergedEstimate",
            Error::EmptyBacktest(_) => "EmptyBacktest",
            Error::Io(_) => "IO",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
