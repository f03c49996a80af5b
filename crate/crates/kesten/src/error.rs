use thiserror::Error;

/// Errors surfaced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or incompatible inputs (dimension mismatch, bad grids, ...).
    #[error("input error: {0}")]
    Input(String),

    /// The scale group cannot be formed (e.g. all scales equal one).
    #[error("group structure error: {0}")]
    Structure(String),

    /// A clause of the standing hypothesis on the driving measure fails.
    #[error("hypothesis error: {0}")]
    Hypothesis(String),

    /// The moment function never crosses one on the searched bracket.
    #[error("no root: {0}")]
    NoRoot(String),

    /// Operation not defined in the requested tail-index regime.
    #[error("regime error: {0}")]
    Regime(String),

    /// Numerical failure (singular solve, non-convergence, ...).
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Too little data to estimate the requested quantity.
    #[error("estimation error: {0}")]
    Estimation(String),

    /// Enumeration or allocation guard exceeded.
    #[error("size error: {0}")]
    Size(String),

    /// Feature combination deliberately not implemented.
    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
