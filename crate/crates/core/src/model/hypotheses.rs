use super::descriptor::Integrand;
use super::spec::ValidatedSpec;
use crate::error::{Error, Result};
use crate::math;

/// Hypothesis verdicts and constants measured on `[0, horizon]`.
///
/// All constants are horizon-limited extrema, not global suprema: they are
/// monotone in the horizon (`m_sup`, `q`, `sigma`, `delta` never decrease and
/// `rho` never increases as the horizon grows).
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    pub horizon: f64,
    /// `verdicts[n - 1]` is the verdict for hypothesis `(a{n})`.
    pub verdicts: [bool; 9],
    /// Smallest gap between consecutive impulse points (counting `tau_0 = 0`)
    /// that lie in the horizon; `None` without such a gap.
    pub rho: Option<f64>,
    /// Largest gap, counting the open gap from the last point to the horizon;
    /// `None` when no impulse point lies in the horizon.
    pub sigma: Option<f64>,
    /// `sup |B_j|` over points in the horizon, 0 without any.
    pub m_sup: f64,
    /// Largest lag `t - h_i(t)` seen on the horizon.
    pub delta: f64,
    /// Max over terms and unit intervals `[k, k+1]`, `k >= 0`, of `int |A_i|`.
    pub q: f64,
    /// The same maximum restricted to `k >= 1`.
    pub q_from_one: f64,
}

impl HypothesisReport {
    /// Verdict for `(a{n})`, `n` in `1..=9`.
    pub fn holds(&self, n: usize) -> bool {
        self.verdicts[n - 1]
    }

    pub fn all_hold(&self) -> bool {
        self.verdicts.iter().all(|v| *v)
    }
}

/// Measures the constants of `(a5)`-`(a9)` on `[0, horizon]` and reports
/// verdicts for `(a1)`-`(a9)`.
///
/// `(a1)`-`(a4)` are structural and already guaranteed by validation;
/// `(a8)` fails when some lag grows without bound, and `(a7)` fails when no
/// impulse point lies in the horizon.
pub fn check_hypotheses(spec: &ValidatedSpec, horizon: f64) -> Result<HypothesisReport> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::arg("horizon must be positive"));
    }
    let imp = &spec.impulses;
    let n_in = imp.count_up_to(horizon);
    let pts = &imp.points[..n_in];

    let mut rho: Option<f64> = None;
    let mut sigma: Option<f64> = None;
    let mut prev = 0.0;
    for &p in pts {
        let gap = p - prev;
        rho = Some(rho.map_or(gap, |r| r.min(gap)));
        sigma = Some(sigma.map_or(gap, |s| s.max(gap)));
        prev = p;
    }
    if n_in > 0 {
        sigma = sigma.map(|s| s.max(horizon - prev));
    }

    let m_sup = imp.multipliers[..n_in].iter().map(|b| math::abs(*b)).fold(0.0, f64::max);

    let delta = spec
        .terms
        .iter()
        .map(|t| t.delay.max_lag_on(0.0, horizon))
        .fold(0.0, f64::max);
    let bounded_lags = spec.terms.iter().all(|t| t.delay.is_lag_bounded());

    let mut q = 0.0_f64;
    let mut q_from_one = 0.0_f64;
    for term in &spec.terms {
        let mut k = 0.0;
        while k < horizon {
            let mass = term.coefficient.integral(k, (k + 1.0).min(horizon), Integrand::Abs);
            q = q.max(mass);
            if k >= 1.0 {
                q_from_one = q_from_one.max(mass);
            }
            k += 1.0;
        }
    }

    let verdicts = [
        true,
        true,
        true,
        true,
        m_sup.is_finite(),
        rho.is_none_or(|r| r > 0.0),
        sigma.is_some(),
        bounded_lags,
        q.is_finite(),
    ];

    Ok(HypothesisReport { horizon, verdicts, rho, sigma, m_sup, delta, q, q_from_one })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn unit_spaced_impulses() {
        let spec = validate(
            ProblemSpec::new(1.0).with_impulses(ImpulseSchedule::periodic(1.0, 12, 0.5)),
        )
        .unwrap();
        let r = check_hypotheses(&spec, 10.0).unwrap();
        assert_eq!(r.rho, Some(1.0));
        assert_eq!(r.sigma, Some(1.0));
        assert_eq!(r.m_sup, 0.5);
        assert!(r.holds(6) && r.holds(7));
    }

    #[test]
    fn unit_coefficient_mass() {
        let spec = validate(ProblemSpec::new(1.0).with_term(DelayTerm::constant(1.0, 0.0))).unwrap();
        let r = check_hypotheses(&spec, 10.0).unwrap();
        assert_eq!(r.q, 1.0);
        assert_eq!(r.q_from_one, 1.0);
        assert!(r.holds(9));
    }

    #[test]
    fn constant_lag_sets_delta() {
        let spec =
            validate(ProblemSpec::new(1.0).with_term(DelayTerm::constant(1.0, 1.0 / 3.0))).unwrap();
        let r = check_hypotheses(&spec, 10.0).unwrap();
        assert_eq!(r.delta, 1.0 / 3.0);
        assert!(r.holds(8));
        // no impulses in range: (a7) has nothing to measure
        assert!(!r.holds(7));
    }

    #[test]
    fn unbounded_delay_fails_a8() {
        let spec = validate(ProblemSpec::new(1.0).with_term(DelayTerm::new(
            FunctionDescriptor::Constant(1.0),
            DeviationDescriptor::Tabulated { abscissae: vec![0.0, 1.0], values: vec![0.0, 0.5] },
        )))
        .unwrap();
        let r = check_hypotheses(&spec, 4.0).unwrap();
        assert!(!r.holds(8));
        assert_eq!(r.delta, 2.0);
    }

    #[test]
    fn q_readings_differ_when_mass_is_front_loaded() {
        let a = FunctionDescriptor::PiecewiseConstant { breakpoints: vec![1.0], values: vec![3.0, 1.0] };
        let spec = validate(
            ProblemSpec::new(1.0)
                .with_term(DelayTerm::new(a, DeviationDescriptor::ConstantLag(0.5))),
        )
        .unwrap();
        let r = check_hypotheses(&spec, 5.0).unwrap();
        assert_eq!(r.q, 3.0);
        assert_eq!(r.q_from_one, 1.0);
    }

    #[test]
    fn rejects_nonpositive_horizon() {
        let spec = validate(ProblemSpec::new(1.0)).unwrap();
        assert!(check_hypotheses(&spec, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn constants_are_monotone_in_horizon(
            gaps in proptest::collection::vec(0.05f64..2.0, 1..8),
            mults in proptest::collection::vec(-3.0f64..3.0, 8),
            coeffs in proptest::collection::vec(-2.0f64..2.0, 4),
            h1 in 0.1f64..10.0,
            extra in 0.0f64..10.0,
        ) {
            let mut points = vec![];
            let mut t = 0.0;
            for g in &gaps { t += g; points.push(t); }
            let n = points.len();
            let a = FunctionDescriptor::PiecewiseConstant {
                breakpoints: vec![0.7, 1.9, 3.1],
                values: coeffs.clone(),
            };
            let spec = validate(
                ProblemSpec::new(1.0)
                    .with_term(DelayTerm::new(a, DeviationDescriptor::ConstantLag(0.3)))
                    .with_impulses(ImpulseSchedule::homogeneous(points, mults[..n].to_vec())),
            ).unwrap();
            let r1 = check_hypotheses(&spec, h1).unwrap();
            let r2 = check_hypotheses(&spec, h1 + extra).unwrap();
            prop_assert!(r2.m_sup >= r1.m_sup);
            prop_assert!(r2.q >= r1.q);
            prop_assert!(r2.delta >= r1.delta);
            if let Some(s1) = r1.sigma { prop_assert!(r2.sigma.unwrap() >= s1); }
            if let Some(p1) = r1.rho { prop_assert!(r2.rho.unwrap() <= p1); }
            if let (Some(p), Some(s)) = (r2.rho, r2.sigma) { prop_assert!(p <= s); }
        }
    }
}
