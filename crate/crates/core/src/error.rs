use thiserror::Error;

/// Errors raised by oracles, geometry, methods and drivers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point is outside the feasible set (violation {violation:e})")]
    NotInSet { violation: f64 },

    #[error("preconditioner weights must be strictly positive")]
    NonPositiveWeight,

    #[error("stepsize {value} violates the limit {limit} ({rule})")]
    StepTooLarge { value: f64, limit: f64, rule: &'static str },

    #[error("dual stepsize theta={theta} must lie in (0, beta={beta})")]
    DualStepOutOfRange { theta: f64, beta: f64 },

    #[error("sampler exhausted after {0} draws")]
    SamplerExhausted(u64),

    #[error("regularity ratio undefined: every sample point is feasible")]
    AllSamplesFeasible,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
