use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("Kepler solver failed to converge (M = {mean_anomaly}, e = {eccentricity})")]
    KeplerFailure { mean_anomaly: f64, eccentricity: f64 },

    /// Newton iteration of the canonical map did not converge.
    #[error("canonical map failed: {0}")]
    MapFailure(String),

    /// The unperturbed frequency vector vanishes.
    #[error("resonant or degenerate frequency: |w| = {0:e}")]
    Resonance(f64),

    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("numeric error: {0}")]
    Numeric(String),

    /// Caller misuse, e.g. mismatched time grids.
    #[error("usage error: {0}")]
    Usage(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
