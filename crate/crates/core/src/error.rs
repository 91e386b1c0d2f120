use thiserror::Error;

/// Errors raised by the engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument or parameter lies outside its admissible domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A Hawkes channel with branching ratio alpha/beta >= 1.
    #[error("supercritical channel: branching ratio alpha/beta = {ratio} must be < 1")]
    Supercritical { ratio: f64 },

    /// Closed-form Hawkes moments are singular when alpha == beta.
    #[error("moment formula unsupported for alpha == beta (= {0})")]
    SingularMoments(f64),

    /// The integrator produced a NaN or infinity.
    #[error("non-finite state in path {path} at t = {time}: component {component}")]
    NonFinite {
        path: u64,
        time: f64,
        component: &'static str,
    },

    /// Every value in the trailing window sits at the positivity floor.
    #[error("series extinct before the trailing window starts")]
    ExtinctBeforeWindow,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
