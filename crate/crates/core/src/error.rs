use alloc::string::String;
use core::fmt;

/// Errors raised by the analysis engine.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A vertex or parameter lies outside the poset or the model's domain.
    Domain(String),
    /// The call is malformed (for example a half-space layer without a window).
    Usage(String),
    /// A configured size cap would be exceeded.
    Resource { what: &'static str, size: u128, cap: u128 },
    /// The configuration is valid but not supported by this engine.
    Unsupported(String),
    /// A documented precondition of the operation does not hold.
    Precondition(String),
    /// An iterative solver ran out of iterations.
    NonConvergence { iterations: usize, best_ratio: f64 },
    /// An invariant that should be impossible to break was broken.
    Internal(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Usage(msg) => write!(f, "usage error: {msg}"),
            Error::Resource { what, size, cap } => {
                write!(f, "resource cap exceeded: {what} = {size} > {cap}")
            }
            Error::Unsupported(msg) => write!(f, "unsupported configuration: {msg}"),
            Error::Precondition(msg) => write!(f, "precondition violated: {msg}"),
            Error::NonConvergence { iterations, best_ratio } => {
                write!(f, "solver did not converge after {iterations} iterations (best ratio {best_ratio})")
            }
            Error::Internal(msg) => write!(f, "internal error: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
