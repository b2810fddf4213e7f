//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument left the domain of an operation (out-of-range arc length,
    /// angle outside a tabulated window, and so on).
    #[error("domain error: {0}")]
    Domain(String),

    /// A chart was evaluated where it is singular (poles of the polar chart).
    #[error("chart error: {0}")]
    Chart(String),

    /// Surface construction violated a stated invariant.
    #[error("construction error: invariant `{invariant}` failed: {detail}")]
    Construction { invariant: String, detail: String },

    /// A metric configuration is not positive definite.
    #[error("configuration error: {0}")]
    Configuration(String),

    /// Adaptive integration could not continue.
    #[error("integration failure at s = {s}: {detail}")]
    Integration { s: f64, detail: String },

    /// A transit did not reach the target section within the time cap.
    #[error("escape error: no section crossing within time cap {cap} (started at theta={theta}, phi={phi})")]
    Escape { cap: f64, theta: f64, phi: f64 },

    /// A separatrix trace drifted off the prescribed invariant value.
    #[error("re-seed error: {0}")]
    Reseed(String),

    /// Growth-rate fitting received unusable data.
    #[error("fit error: {0}")]
    Fit(String),

    /// Configuration file problems, reported all at once.
    #[error("configuration invalid:\n{}", issues.join("\n"))]
    Config { issues: Vec<String> },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn construction(invariant: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Construction {
            invariant: invariant.into(),
            detail: detail.into(),
        }
    }
}
