use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    /// The requested interval carries no mass under the sampler.
    #[error("interval [{lo}, {hi}] has zero mass")]
    DegenerateInterval { lo: i64, hi: i64 },
    /// A rejection loop exceeded its iteration cap.
    #[error("rejection loop exceeded {cap} iterations")]
    Runaway { cap: u64 },
    #[error("unsupported mode: {0}")]
    UnsupportedMode(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
