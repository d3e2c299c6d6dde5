use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("singular point: {0}")]
    Singular(String),
    #[error("sampling budget exhausted: {0}")]
    SamplingExhausted(String),
    #[error("derivative order {requested} exceeds supported depth {supported}")]
    DerivativeDepth { requested: usize, supported: usize },
    #[error("unknown suite `{0}`")]
    UnknownSuite(String),
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
