use thiserror::Error;

/// Errors raised by the design, bound and exact-regret computations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Inputs that do not describe a well-formed design, state or profile.
    #[error("invalid structure: {0}")]
    Structure(String),

    /// A numeric argument outside the domain of the operation.
    #[error("argument out of domain: {0}")]
    Domain(String),

    /// A numerical routine failed where it should not for valid input.
    #[error("internal numerical failure: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn structure(msg: impl Into<String>) -> Error {
    Error::Structure(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
