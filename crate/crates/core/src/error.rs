use thiserror::Error;

/// Errors raised across the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("stable increment overflowed (alpha={alpha}, dt={dt})")]
    Overflow { alpha: f64, dt: f64 },

    #[error("path too short: queried t={t} but sigma_final={sigma_final}")]
    PathTooShort { t: f64, sigma_final: f64 },

    #[error("insufficient range: grid spans {decades:.2} decades with {points} points (need >= 2 decades, >= 10 points)")]
    InsufficientRange { decades: f64, points: usize },

    #[error("too many incomplete paths: {incomplete} of {total}")]
    TooManyIncomplete { incomplete: usize, total: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("linear solver failure: {0}")]
    SolverFailure(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
