//! Error type shared by the whole crate.

use alloc::string::String;
use core::fmt;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// A precondition on an argument was violated.
    InvalidParameter(String),
    /// A multiplicity-spec string could not be parsed.
    Parse(String),
    /// An iterative solver failed to reach its tolerance.
    Nonconvergence(&'static str),
    /// Adaptive quadrature hit its subdivision budget or a non-finite value.
    Quadrature(&'static str),
    /// The operation is only defined in the other regime (normal/condensed).
    Regime(String),
    /// A weight table would exceed the memory budget.
    Capacity {
        required_bytes: u64,
        budget_bytes: u64,
        suggested_stride: usize,
    },
    /// Exhaustive enumeration was asked for an instance above its cap.
    EnumerationCap { cap: u64, requested: u64 },
    /// The importance sampler's acceptance rate is too low to be useful.
    Efficiency { acceptance: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::Parse(msg) => write!(f, "cannot parse multiplicity spec: {msg}"),
            Error::Nonconvergence(what) => write!(f, "solver did not converge: {what}"),
            Error::Quadrature(what) => write!(f, "quadrature failed: {what}"),
            Error::Regime(msg) => write!(f, "regime error: {msg}"),
            Error::Capacity {
                required_bytes,
                budget_bytes,
                suggested_stride,
            } => write!(
                f,
                "weight table needs {required_bytes} bytes (budget {budget_bytes}); \
                 retry with checkpoint stride >= {suggested_stride}"
            ),
            Error::EnumerationCap { cap, requested } => write!(
                f,
                "enumeration requested at M = {requested}, above the cap {cap}"
            ),
            Error::Efficiency { acceptance } => write!(
                f,
                "importance-sampler acceptance rate {acceptance:.2e} below 1e-4; \
                 use the exact sequential sampler"
            ),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
