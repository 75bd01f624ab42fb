use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Expected information is singular or too badly conditioned to invert.
    #[error("singular information matrix (condition estimate {condition:.3e})")]
    SingularInformation { condition: f64 },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("enumeration over {outcomes} outcomes exceeds the limit of {limit}")]
    EnumerationTooLarge { outcomes: u128, limit: u128 },
}
