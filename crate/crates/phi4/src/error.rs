use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numeric failure: {0}")]
    NumericFailure(String),
    #[error("degenerate denominator: {0}")]
    DegenerateDenominator(String),
    #[error("missing provider for {0}")]
    MissingProvider(String),
    #[error("derivative of order {0} not available")]
    MissingDerivative(usize),
    #[error("size limit exceeded: {0}")]
    SizeLimit(String),
    #[error("fit failure: {0}")]
    FitFailure(String),
    #[error("io error")]
    Io(#[from] std::io::Error),
    #[error("format version mismatch: found {found}, expected {expected}")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("integrity error: {0}")]
    Integrity(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
