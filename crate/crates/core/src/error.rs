use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Array shapes disagree or a dimension is invalid.
    Shape(String),
    /// A scalar argument is outside the valid domain.
    Domain(String),
    /// Mask tuning could not reach the requested acceleration.
    Tuning { target: f64, achieved: f64 },
    /// Covariance matrix is not Hermitian positive definite.
    NotPositiveDefinite,
    /// Input contains only zeros where a nonzero value is required.
    AllZero(&'static str),
    /// A tape was replayed against weights that changed since the forward pass.
    StaleTape { tape: u64, weights: u64 },
    /// A required input (ground truth, grid values, ...) is missing.
    Missing(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Shape(msg) => write!(f, "shape error: {msg}"),
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Tuning { target, achieved } => write!(
                f,
                "mask tuning failed: target acceleration {target}, best achieved {achieved}"
            ),
            Error::NotPositiveDefinite => f.write_str("covariance is not positive definite"),
            Error::AllZero(what) => write!(f, "{what} is identically zero"),
            Error::StaleTape { tape, weights } => write!(
                f,
                "tape recorded at weight generation {tape}, weights are at generation {weights}"
            ),
            Error::Missing(what) => write!(f, "missing {what}"),
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn shape_err(msg: impl Into<String>) -> Error {
    Error::Shape(msg.into())
}

pub(crate) fn domain_err(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
