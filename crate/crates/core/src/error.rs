use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Input outside an operation's documented domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Latency series diverges (zero detection probability at the recurring
    /// decision, so the expected latency is infinite).
    #[error("latency diverges: recurring detection probability is zero")]
    Divergence,

    /// Latency series did not capture enough probability mass.
    #[error("series did not converge: residual mass {residual:.3e} after {terms} terms")]
    NonConvergence { residual: f64, terms: usize },

    /// A sweep specification failed validation.
    #[error("invalid sweep spec: {0}")]
    InvalidSpec(String),

    /// Monte-Carlo result disagrees with the analytic value it must match.
    #[error("consistency check failed: {0}")]
    Consistency(String),

    /// No row of a sweep could reach its target.
    #[error("target unreachable: {0}")]
    Unreachable(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
