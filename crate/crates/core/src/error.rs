use thiserror::Error;

/// Everything that can go wrong inside the laboratory.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("wavenumber 2^{0} overflows binary64")]
    Overflow(u32),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("index {index} outside {lo}..={hi}")]
    IndexOutOfRange { index: i64, lo: i64, hi: i64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("step size underflow at t={t}: step {step:e} below minimum")]
    StepUnderflow { t: f64, step: f64 },

    #[error("state left the finite range at t={t}")]
    NonFinite { t: f64 },

    #[error("positivity violated at t={t}: X{mode} = {value:e}")]
    PositivityViolation { t: f64, mode: usize, value: f64 },

    #[error("series tail bound {bound:e} not met at |z|={modulus}")]
    RadiusExceeded { modulus: f64, bound: f64 },

    #[error("series overflow: D_k finite only up to k={largest_safe}")]
    SeriesOverflow { largest_safe: usize },

    #[error("bracket failure: {0}")]
    BracketFailure(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("inconclusive classification after {count} terms")]
    Inconclusive { count: usize },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Short variant name, used on the command line's standard error.
    pub fn name(&self) -> &'static str {
        match self {
            Error::Overflow(_) => "Overflow",
            Error::InvalidState(_) => "InvalidState",
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::StepUnderflow { .. } => "StepUnderflow",
            Error::NonFinite { .. } => "NonFinite",
            Error::PositivityViolation { .. } => "PositivityViolation",
            Error::RadiusExceeded { .. } => "RadiusExceeded",
            Error::SeriesOverflow { .. } => "SeriesOverflow",
            Error::BracketFailure(_) => "BracketFailure",
            Error::Domain(_) => "Domain",
            Error::Inconclusive { .. } => "Inconclusive",
            Error::Precondition(_) => "Precondition",
            Error::Io(_) => "Io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
