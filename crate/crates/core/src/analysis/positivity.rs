use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{Integrand, ValidatedSpec};

/// `1/e`.
pub const INV_E: f64 = 0.36787944117144233;

/// `sum_i` of the integral of `A_i^+` over `[max(h_i(t), 0), t]`.
pub fn positivity_functional(spec: &ValidatedSpec, t: f64) -> f64 {
    spec.terms
        .iter()
        .map(|term| {
            let lo = term.delay.eval(t).max(0.0);
            if t > lo { term.coefficient.integral(lo, t, Integrand::PositivePart) } else { 0.0 }
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositivityReport {
    pub max_functional: f64,
    /// Grid point where the maximum was seen.
    pub at: f64,
    pub samples: Vec<(f64, f64)>,
    /// `max_functional <= 1/e`: a certificate that `C > 0`. A failure is only
    /// inconclusive since the condition is sufficient, not necessary.
    pub pass: bool,
}

/// Evaluates [`positivity_functional`] on `0, grid_step, ..., horizon`.
pub fn positivity_test(spec: &ValidatedSpec, horizon: f64, grid_step: f64) -> Result<PositivityReport> {
    if !(horizon > 0.0) || !(grid_step > 0.0) || !horizon.is_finite() {
        return Err(Error::arg("horizon and grid step must be positive"));
    }
    let n = crate::math::ceil(horizon / grid_step - 1e-9) as usize;
    let samples: Vec<(f64, f64)> = (0..=n)
        .map(|i| {
            let t = if i == n { horizon } else { i as f64 * grid_step };
            (t, positivity_functional(spec, t))
        })
        .collect();
    let (at, max_functional) =
        samples.iter().copied().fold((0.0, f64::NEG_INFINITY), |m, s| if s.1 > m.1 { s } else { m });
    Ok(PositivityReport { max_functional, at, pass: max_functional <= INV_E, samples })
}
