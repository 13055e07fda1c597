use alloc::vec::Vec;
use core::ops::Deref;

use super::descriptor::{DeviationDescriptor, FunctionDescriptor};
use super::impulses::ImpulseSchedule;
use super::validation::{Location, ValidationErrors, Violation};

/// One delayed term `A(t) x(h(t))` on the left-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayTerm {
    pub coefficient: FunctionDescriptor,
    pub delay: DeviationDescriptor,
}

impl DelayTerm {
    pub fn new(coefficient: FunctionDescriptor, delay: DeviationDescriptor) -> Self {
        Self { coefficient, delay }
    }

    /// `a * x(t - lag)` with constant `a` and `lag`.
    pub fn constant(a: f64, lag: f64) -> Self {
        Self::new(FunctionDescriptor::Constant(a), DeviationDescriptor::ConstantLag(lag))
    }
}

/// A complete impulsive delay problem:
///
/// ```text
/// x'(t) + sum_i A_i(t) x(h_i(t)) = r(t),  x(xi) = phi(xi) for xi < 0,  x(0) = initial_value
/// x(tau_j) = B_j x(tau_j - 0) + alpha_j
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub terms: Vec<DelayTerm>,
    pub forcing: FunctionDescriptor,
    /// Values for negative arguments only.
    pub history: FunctionDescriptor,
    pub initial_value: f64,
    pub impulses: ImpulseSchedule,
}

impl ProblemSpec {
    /// Homogeneous, impulse-free problem with the given `x(0)` and no terms.
    pub fn new(initial_value: f64) -> Self {
        Self {
            terms: Vec::new(),
            forcing: FunctionDescriptor::zero(),
            history: FunctionDescriptor::zero(),
            initial_value,
            impulses: ImpulseSchedule::empty(),
        }
    }

    pub fn with_term(mut self, term: DelayTerm) -> Self {
        self.terms.push(term);
        self
    }

    pub fn with_forcing(mut self, forcing: FunctionDescriptor) -> Self {
        self.forcing = forcing;
        self
    }

    pub fn with_history(mut self, history: FunctionDescriptor) -> Self {
        self.history = history;
        self
    }

    pub fn with_impulses(mut self, impulses: ImpulseSchedule) -> Self {
        self.impulses = impulses;
        self
    }

    /// True when no term is actually delayed, so the equation is an ODE.
    pub fn is_delay_free(&self) -> bool {
        self.terms.iter().all(|t| t.delay.is_zero_lag())
    }

    fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !self.initial_value.is_finite() {
            out.push(Violation::NonFiniteInitialValue);
        }
        self.impulses.check(&mut out);
        self.forcing.check(Location::Forcing, &mut out);
        self.history.check(Location::History, &mut out);
        for (i, term) in self.terms.iter().enumerate() {
            term.coefficient.check(Location::Coefficient(i), &mut out);
            term.delay.check(i, &mut out);
        }
        out
    }
}

/// A [`ProblemSpec`] that passed [`validate`]. Immutable.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedSpec(ProblemSpec);

impl ValidatedSpec {
    pub fn into_inner(self) -> ProblemSpec {
        self.0
    }

    /// The homogeneous equation with zero history, zero jumps and `x(0) = 1`;
    /// the structure (terms, multipliers) is kept.
    pub fn homogeneous(&self) -> ValidatedSpec {
        ValidatedSpec(ProblemSpec {
            terms: self.0.terms.clone(),
            forcing: FunctionDescriptor::zero(),
            history: FunctionDescriptor::zero(),
            initial_value: 1.0,
            impulses: self.0.impulses.without_jumps(),
        })
    }

    /// The same problem with the impulse schedule removed.
    pub fn without_impulses(&self) -> ValidatedSpec {
        ValidatedSpec(ProblemSpec { impulses: ImpulseSchedule::empty(), ..self.0.clone() })
    }

    /// Replaces the inputs (`x(0)`, `r`, `phi`, `alpha`) while keeping the
    /// structure. The new inputs are checked like any others.
    pub fn with_inputs(
        &self,
        initial_value: f64,
        forcing: FunctionDescriptor,
        history: FunctionDescriptor,
        jumps: Vec<f64>,
    ) -> Result<ValidatedSpec, ValidationErrors> {
        let mut spec = self.0.clone();
        spec.initial_value = initial_value;
        spec.forcing = forcing;
        spec.history = history;
        spec.impulses.jumps = jumps;
        validate(spec)
    }
}

impl Deref for ValidatedSpec {
    type Target = ProblemSpec;

    fn deref(&self) -> &ProblemSpec {
        &self.0
    }
}

/// Checks every structural invariant of `spec` and reports all violations at
/// once.
pub fn validate(spec: ProblemSpec) -> Result<ValidatedSpec, ValidationErrors> {
    let violations = spec.violations();
    if violations.is_empty() {
        Ok(ValidatedSpec(spec))
    } else {
        Err(ValidationErrors(violations))
    }
}
