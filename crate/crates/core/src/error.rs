use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter violates one of its invariants.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A variance path fails Bayes plausibility.
    #[error(
        "variance path is not Bayes-plausible at t = {t}: {constraint} exceeded by {excess:e}"
    )]
    NotPlausible {
        t: f64,
        constraint: &'static str,
        excess: f64,
    },

    /// Two inputs that must describe the same policy do not.
    #[error("incompatible inputs: {0}")]
    Incompatible(String),

    /// A root search failed to bracket or converge.
    #[error("root search failed: {0}")]
    RootSearch(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
