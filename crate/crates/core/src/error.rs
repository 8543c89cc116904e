use thiserror::Error;

/// Errors raised when constructing or running experiments.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid reward model: {0}")]
    InvalidModel(String),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("invalid threshold schedule: {0}")]
    InvalidSchedule(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unknown policy id `{0}`")]
    UnknownPolicy(String),
    #[error("reward {0} outside [0, 1] for a bounded-reward policy")]
    RewardOutOfRange(f64),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Io(err.to_string())
    }
}
