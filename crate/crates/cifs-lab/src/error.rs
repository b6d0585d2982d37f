use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes shared by every module in the crate.
///
/// Precondition violations are reported as values, never panics, so callers
/// (and the CLI harness) can map them to exit codes.
#[derive(Debug, Error)]
#[non_exhaustive]
pub enum Error {
    /// Input violates a documented precondition.
    #[error("domain: {0}")]
    Domain(String),

    /// A truncation bound below the smallest lattice modulus admits no index.
    #[error("empty truncation: bound {bound} is below the smallest lattice modulus {min_modulus}")]
    EmptyTruncation { bound: f64, min_modulus: f64 },

    /// An enumeration would exceed the configured size cap.
    #[error("resource: {what} would have {size} elements, cap is {cap}")]
    Resource {
        what: &'static str,
        size: u128,
        cap: u128,
    },

    /// Pressure values at the bracket endpoints do not straddle 1.
    #[error("no Bowen bracket on this truncation: psi({t_lo}) = {psi_lo}, psi({t_hi}) = {psi_hi}")]
    NoBracket {
        t_lo: f64,
        t_hi: f64,
        psi_lo: f64,
        psi_hi: f64,
    },

    /// A fit or probe did not stabilize on the supplied grid.
    #[error("estimation: {0}")]
    Estimation(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Error {
        Error::Domain(msg.into())
    }

    pub(crate) fn estimation(msg: impl Into<String>) -> Error {
        Error::Estimation(msg.into())
    }
}
