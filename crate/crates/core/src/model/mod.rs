//! Problem definition: coefficient, delay and history descriptors, the
//! impulse schedule, validation and the hypothesis checks.

mod descriptor;
mod hypotheses;
mod impulses;
mod spec;
mod validation;

pub use descriptor::{DeviationDescriptor, FunctionDescriptor, Integrand};
pub use hypotheses::{check_hypotheses, HypothesisReport};
pub use impulses::ImpulseSchedule;
pub use spec::{validate, DelayTerm, ProblemSpec, ValidatedSpec};
pub use validation::{Location, ValidationErrors, Violation};
