use alloc::string::String;

use crate::model::ValidationErrors;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid problem: {0}")]
    Validation(ValidationErrors),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A delayed argument points past the part of the solution computed so far.
    #[error("delayed argument h({t}) = {arg} lies beyond the computed solution")]
    DelayBeyondComputed { t: f64, arg: f64 },

    #[error("time {t} outside the computed range [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },

    #[error("{count} impulse points between s and t exceed the enumeration cap of {cap}")]
    TooManyImpulses { count: usize, cap: usize },

    #[error("the product formula only applies to equations without delay")]
    DelayPresent,

    #[error("interval [{s}, {t}] straddles the impulse point {tau}")]
    StraddlesImpulse { s: f64, t: f64, tau: f64 },

    #[error("hypotheses not met: {0}")]
    HypothesesNotMet(String),

    #[error("not enough usable samples: {found} above the floor, {needed} needed")]
    InsufficientSamples { found: usize, needed: usize },

    #[error("quadrature step {step} is coarser than the smallest impulse gap {gap}")]
    QuadratureTooCoarse { step: f64, gap: f64 },
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
