use thiserror::Error;

/// Which end of the integration range broke integrability.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum End {
    Zero,
    Infinity,
}

impl std::fmt::Display for End {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            End::Zero => write!(f, "0"),
            End::Infinity => write!(f, "infinity"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{which} = {value} outside admissible interval {interval}")]
    OutOfRange {
        which: &'static str,
        value: f64,
        interval: String,
    },
    #[error("integrand not integrable at {end}: local exponent {exponent}")]
    NotIntegrable { end: End, exponent: f64 },
    #[error("quadrature tolerance not met: error bound {error_bound} after {panels} panels")]
    ToleranceNotMet { error_bound: f64, panels: usize },
    #[error("covariance repair needs jitter {jitter}, above cap {cap}")]
    PsdRepairExceeded { jitter: f64, cap: f64 },
    #[error("grid violates Nyquist: cutoff {cutoff} > pi/dx = {limit}")]
    NyquistViolation { cutoff: f64, limit: f64 },
    #[error("discretization bias {bias} exceeds budget {budget}")]
    TruncationBudgetExceeded { bias: f64, budget: f64 },
    #[error("point x = {x} is within {h_max} of the grid edge")]
    EdgeTooClose { x: f64, h_max: f64 },
    #[error("grid point violates lemma precondition: {0}")]
    RegionViolation(String),
    #[error("pair ({i}, {j}) separated by {distance} < claimed {delta}")]
    SeparationViolated {
        i: i64,
        j: i64,
        distance: f64,
        delta: f64,
    },
    #[error("chaining series diverges: {0}")]
    DivergentSeries(String),
    #[error("resolution insufficient: refinement moved estimate by {change}, std error {std_error}")]
    ResolutionInsufficient { change: f64, std_error: f64 },
    #[error("parameter outside theorem window: {0}")]
    ValidityWindowViolated(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. }
            | Error::InvalidInput(_)
            | Error::OutOfRange { .. }
            | Error::ValidityWindowViolated(_)
            | Error::EdgeTooClose { .. }
            | Error::NyquistViolation { .. }
            | Error::RegionViolation(_)
            | Error::Io(_) => 2,
            _ => 3,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
