use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A phase value outside the half-open interval `[0, 2π)`.
    OutOfRangePhase {
        subject: usize,
        channel: usize,
        time: usize,
        value: f64,
    },
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    NonIncreasingGrid {
        index: usize,
    },
    GridTooShort(usize),
    InvalidKnots(&'static str),
    DomainError {
        t: f64,
        lo: f64,
        hi: f64,
    },
    TooManyBasisFunctions(usize),
    NonpositiveVariance(f64),
    InvalidTruncation(u32),
    InvalidHyperparams(&'static str),
    /// The matrix handed to a Cholesky factorization was not positive definite.
    Factorization {
        pivot: usize,
    },
    InvalidChainConfig(&'static str),
    EmptyChain,
    WrapInvariance {
        difference: f64,
    },
    InvalidNoiseLevel(f64),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::OutOfRangePhase {
                subject,
                channel,
                time,
                value,
            } => write!(
                f,
                "phase {value} at (subject {subject}, channel {channel}, time {time}) is outside [0, 2pi)"
            ),
            Error::DimensionMismatch { what, expected, found } => {
                write!(f, "dimension mismatch for {what}: expected {expected}, found {found}")
            }
            Error::NonIncreasingGrid { index } => {
                write!(f, "time grid is not strictly increasing at index {index}")
            }
            Error::GridTooShort(t) => write!(f, "time grid needs at least 2 points, got {t}"),
            Error::InvalidKnots(why) => write!(f, "invalid knots: {why}"),
            Error::DomainError { t, lo, hi } => {
                write!(f, "t = {t} lies outside the basis domain [{lo}, {hi}]")
            }
            Error::TooManyBasisFunctions(l) => {
                write!(f, "{l} basis functions requested, at most 30 are supported")
            }
            Error::NonpositiveVariance(v) => write!(f, "variance must be positive, got {v}"),
            Error::InvalidTruncation(m) => write!(f, "wrap truncation must be >= 1, got {m}"),
            Error::InvalidHyperparams(why) => write!(f, "invalid hyperparameters: {why}"),
            Error::Factorization { pivot } => {
                write!(f, "matrix is not positive definite (pivot {pivot})")
            }
            Error::InvalidChainConfig(why) => write!(f, "invalid chain configuration: {why}"),
            Error::EmptyChain => write!(f, "posterior chain holds no draws"),
            Error::WrapInvariance { difference } => {
                write!(f, "PLV with and without wrap counts differ by {difference:e}")
            }
            Error::InvalidNoiseLevel(b) => write!(f, "noise level must be positive, got {b}"),
        }
    }
}

impl core::error::Error for Error {}
