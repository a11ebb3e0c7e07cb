use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the simulator can report.
///
/// Each variant maps onto one stable protocol code (see [`Error::code`]).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("malformed input: {0}")]
    Parse(String),
    #[error("wrong mode: {0}")]
    Mode(String),
    #[error("address out of range: {0}")]
    Address(String),
    #[error("invalid device or cell state: {0}")]
    State(String),
    #[error("value out of range: {0}")]
    Range(String),
    #[error("parameter out of domain: {0}")]
    Param(String),
    #[error("half-select violation: {0}")]
    Invariant(String),
    #[error("i/o failure: {0}")]
    Io(String),
}

impl Error {
    /// Protocol error code, as sent after `ERR`.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Parse(_) => "PARSE",
            Error::Mode(_) => "MODE",
            Error::Address(_) => "ADDR",
            Error::State(_) => "STATE",
            Error::Range(_) | Error::Param(_) => "RANGE",
            Error::Invariant(_) => "INVARIANT",
            Error::Io(_) => "IO",
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
        match e.kind() {
            csv::ErrorKind::Io(_) => Error::Io(e.to_string()),
            _ => Error::Parse(e.to_string()),
        }
    }
}
