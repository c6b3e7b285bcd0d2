use thiserror::Error;

/// Errors raised by the toolkit. The CLI maps every variant to exit code 2.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A point or parameter lies outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The backend cannot perform the requested operation (e.g. no geodesic oracle).
    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// Malformed textual input (matrices, group tables, descriptors).
    #[error("parse error: {0}")]
    Parse(String),

    /// The isometry has the wrong type for the operation (e.g. a parabolic map
    /// where a hyperbolic one is required).
    #[error("isometry class error: {0}")]
    Class(String),

    /// An operation's precondition does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The pair of isometries generates an elementary group.
    #[error("elementary pair: {0}")]
    Elementary(String),

    /// Enumeration would exceed the configured budget.
    #[error("resource budget exceeded: {0}")]
    Budget(String),

    /// Invalid numeric parameter.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
