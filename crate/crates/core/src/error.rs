use thiserror::Error;

/// Errors raised across the network, dynamics, analytic and oracle engines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("negative rate: {0}")]
    NegativeRate(String),
    #[error("coefficient p[{index}] has modulus {modulus}, expected 1")]
    NonUnitPCoefficient { index: usize, modulus: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("drift matrix has an eigenvalue with real part {0:e} > 0")]
    UnstableSystem(f64),
    #[error("drift matrix is singular or marginal (eigenvalue real part {0:e}); no unique steady state")]
    SingularDrift(f64),
    #[error("not converged: {0}")]
    NotConverged(String),
    #[error("effective rates {0} and {1} are degenerate; use the numerical engine")]
    DegenerateRates(usize, usize),
    #[error("effective rate of mode {0} is zero")]
    ZeroRate(usize),
    #[error("singular matrix: {0}")]
    SingularMatrix(String),
    #[error("reference ergotropy is zero")]
    ZeroReference,
    #[error("Fock space dimension {dim} exceeds cap {cap}")]
    DimensionOverflow { dim: usize, cap: usize },
    #[error("truncation unsound: top-level population {population:e} of mode {mode} exceeds {threshold:e}")]
    TruncationUnsound {
        mode: usize,
        population: f64,
        threshold: f64,
    },
    #[error("unsupported spec: {0}")]
    UnsupportedSpec(String),
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// True for errors caused by malformed input rather than a failing engine.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch(_)
                | Error::NegativeRate(_)
                | Error::NonUnitPCoefficient { .. }
                | Error::InvalidParameter(_)
                | Error::InvalidPlan(_)
                | Error::Config(_)
                | Error::UnsupportedSpec(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
