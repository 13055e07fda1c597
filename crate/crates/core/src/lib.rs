//! Scalar linear impulsive delay differential equations.
//!
//! The crate integrates problems of the form
//!
//! ```text
//! x'(t) + sum_i A_i(t) x(h_i(t)) = r(t),      t >= 0,  x(xi) = phi(xi), xi < 0
//! x(tau_j) = B_j x(tau_j - 0) + alpha_j,      j = 1, 2, ...
//! ```
//!
//! by the method of steps on a breakpoint-aligned mesh, computes the
//! fundamental solution `X(t)` and the fundamental functions `G(t, s)` (with
//! impulses) and `C(t, s)` (without), and provides numerical checks of the
//! variation-of-constants representation, the ordered-subset expansion of
//! `G` in terms of `C`, positivity criteria and exponential estimates.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, CSV output and
//! the command-line front end live in the companion `idde-cli` crate.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod error;
pub mod expansion;
pub mod fundamental;
pub mod integrator;
pub(crate) mod math;
pub mod model;
pub mod representation;

pub use error::{Error, Result};
pub use integrator::{MeshOptions, PiecewiseSolution};
pub use model::{
    validate, DelayTerm, DeviationDescriptor, FunctionDescriptor, ImpulseSchedule, ProblemSpec,
    ValidatedSpec,
};
