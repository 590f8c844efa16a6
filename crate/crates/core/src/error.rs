//! Crate-wide error type.
//!
//! Three tiers: `Config` for unusable requests (bad grids, missing horizon),
//! `Domain` for arguments outside an operation's mathematical domain, and
//! `Invariant` for internal consistency violations that should never be
//! reachable from public entry points.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// The request itself is malformed (empty checkpoint list, horizon of
    /// zero, unsupported name, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// Arguments are structurally fine but outside the operation's domain
    /// (scale factor zero, run endpoints out of order, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// An internal invariant failed. Reaching this is a bug.
    #[error("invariant violation: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn invariant(msg: impl Into<String>) -> Self {
        Error::Invariant(msg.into())
    }
}
