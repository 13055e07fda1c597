use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fundamental::{ColumnCache, Kind};
use crate::integrator::MeshOptions;
use crate::math;
use crate::model::{check_hypotheses, Integrand, ValidatedSpec};

/// `G` values this far below zero count as negative.
const NEGATIVE_SLACK: f64 = 1e-12;

/// Which argument produced the constants of an [`EstimateReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Bound on `X(t)` built from `X(tau_1)` and the start of `X`.
    Theorem2,
    /// Bound on `G(t, s)` built from `M`, `Q` and `m`.
    Theorem3,
    Fitted,
}

/// Constants of `|G(t, s)| <= N exp(-nu (t - s))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateReport {
    pub k: f64,
    pub nu: f64,
    pub n: f64,
    pub sigma: Option<f64>,
    /// Horizon over which `k` was measured; the true `k` is a supremum over
    /// all time and can only be larger.
    pub horizon: Option<f64>,
    /// Smallest gap between impulse points seen in the horizon, reported
    /// alongside since the argument does not obviously need it.
    pub min_gap: Option<f64>,
    pub provenance: Provenance,
}

/// Largest jump-kernel sum over the sampled times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KEstimate {
    /// `max(raw_max, 1 + 1e-9)`.
    pub k: f64,
    pub raw_max: f64,
    /// Where `raw_max` was reached.
    pub at: f64,
    pub horizon: f64,
}

/// `ln(k / (k - 1)) / sigma`.
pub fn decay_exponent(k: f64, sigma: f64) -> Result<f64> {
    if !(k > 1.0) || !k.is_finite() {
        return Err(Error::arg(format!("k = {k} must exceed 1")));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::arg(format!("sigma = {sigma} must be positive")));
    }
    Ok(math::ln(k / (k - 1.0)) / sigma)
}

/// Constants bounding `X`: `N = max(X(tau_1) k^3 / (k-1)^2, boundary_sup)`,
/// where `boundary_sup` is the supremum of `exp(nu t) X(t)` on `[0, tau_1]`.
pub fn exponential_constants(k: f64, sigma: f64, x_tau1: f64, boundary_sup: f64) -> Result<EstimateReport> {
    let nu = decay_exponent(k, sigma)?;
    let n = (x_tau1 * k * k * k / ((k - 1.0) * (k - 1.0))).max(boundary_sup);
    Ok(EstimateReport {
        k,
        nu,
        n,
        sigma: Some(sigma),
        horizon: None,
        min_gap: None,
        provenance: Provenance::Theorem2,
    })
}

/// Constants bounding `G(t, s)` uniformly in `s`, from `M = sup |B_j|`, the
/// unit-interval mass bound `Q` of the coefficients and the number `m` of
/// delay terms.
pub fn theorem3_constants(k: f64, sigma: f64, m_sup: f64, q: f64, m: usize) -> Result<EstimateReport> {
    let nu = decay_exponent(k, sigma)?;
    if !(m_sup >= 0.0) || !(q >= 0.0) {
        return Err(Error::arg("M and Q must be nonnegative"));
    }
    let mq = m as f64 * q;
    let first = (1.0 + m_sup) * math::exp(mq * sigma) * k * k * k / ((k - 1.0) * (k - 1.0));
    let second = (1.0 + m_sup) * math::exp(sigma * (nu + mq));
    Ok(EstimateReport {
        k,
        nu,
        n: first.max(second),
        sigma: Some(sigma),
        horizon: None,
        min_gap: None,
        provenance: Provenance::Theorem3,
    })
}

/// `X(tau_1) (k - 1)^(i - 1) / k^(i - 2)`, the bound on `X(tau_i)`.
pub fn induction_bound(x_tau1: f64, k: f64, i: usize) -> f64 {
    x_tau1 * math::powi(k - 1.0, i as i32 - 1) / math::powi(k, i as i32 - 2)
}

fn require_nonnegative_coefficients(spec: &ValidatedSpec, horizon: f64) -> Result<()> {
    for (i, term) in spec.terms.iter().enumerate() {
        let inf = term.coefficient.inf_on(0.0, horizon);
        if inf < 0.0 {
            return Err(Error::HypothesesNotMet(format!(
                "coefficient of term {} reaches {inf}",
                i + 1
            )));
        }
    }
    Ok(())
}

/// Largest `sum_{0 < tau_i <= t} G(t, tau_i)` over `t` in `t_grid` and the
/// impulse points up to `horizon`.
///
/// Requires `A_i >= 0`, `X > 0` and `G(., tau_i) >= 0` on the computed
/// columns; otherwise [`Error::HypothesesNotMet`].
pub fn estimate_k(
    spec: &ValidatedSpec,
    horizon: f64,
    t_grid: &[f64],
    opts: &MeshOptions,
) -> Result<KEstimate> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::arg("horizon must be positive"));
    }
    require_nonnegative_coefficients(spec, horizon)?;
    let taus: Vec<f64> = spec.impulses.points.iter().copied().filter(|&p| p <= horizon).collect();
    let mut times: Vec<f64> =
        t_grid.iter().copied().filter(|&t| (0.0..=horizon).contains(&t)).chain(taus.iter().copied()).collect();
    times.sort_by(|a, b| a.total_cmp(b));
    times.dedup();

    let mut cache = ColumnCache::new(spec, horizon, Kind::Impulsive, *opts).with_nodes(&times);
    let x_min = cache.column(0.0)?.min_value();
    if !(x_min > 0.0) {
        return Err(Error::HypothesesNotMet(format!("X reaches {x_min}")));
    }
    for &tau in &taus {
        if tau < horizon {
            let g_min = cache.column(tau)?.min_value();
            if g_min < -NEGATIVE_SLACK {
                return Err(Error::HypothesesNotMet(format!("G(., {tau}) reaches {g_min}")));
            }
        }
    }

    let (mut raw_max, mut at) = (0.0, 0.0);
    for &t in &times {
        let mut sum = 0.0;
        for &tau in taus.iter().take_while(|&&p| p <= t) {
            sum += cache.value(t, tau)?;
        }
        if sum > raw_max {
            raw_max = sum;
            at = t;
        }
    }
    Ok(KEstimate { k: raw_max.max(1.0 + 1e-9), raw_max, at, horizon })
}

fn sigma_on(spec: &ValidatedSpec, horizon: f64) -> Result<(f64, Option<f64>, crate::model::HypothesisReport)> {
    let hyp = check_hypotheses(spec, horizon)?;
    let sigma = hyp
        .sigma
        .ok_or_else(|| Error::HypothesesNotMet(format!("no impulse point in [0, {horizon}]")))?;
    Ok((sigma, hyp.rho, hyp))
}

/// `k` from [`estimate_k`], `sigma` from the impulse gaps, and the bound on
/// `X` from [`exponential_constants`], all measured on `[0, horizon]`.
pub fn theorem2_estimate(
    spec: &ValidatedSpec,
    horizon: f64,
    t_grid: &[f64],
    opts: &MeshOptions,
) -> Result<EstimateReport> {
    let (sigma, rho, _) = sigma_on(spec, horizon)?;
    let ke = estimate_k(spec, horizon, t_grid, opts)?;
    let nu = decay_exponent(ke.k, sigma)?;
    let tau1 = spec.impulses.points[0];
    let mut cache = ColumnCache::new(spec, horizon, Kind::Impulsive, *opts);
    let x = cache.column(0.0)?;
    let mut boundary_sup = f64::NEG_INFINITY;
    for (i, &t) in x.nodes().iter().enumerate().take_while(|(_, &t)| t <= tau1) {
        let v = if t == tau1 { x.left_values()[i] } else { x.values()[i] };
        boundary_sup = boundary_sup.max(math::exp(nu * t) * v);
    }
    let x_tau1 = x.eval(tau1).ok_or(Error::OutOfRange { t: tau1, start: 0.0, end: horizon })?;
    let mut report = exponential_constants(ke.k, sigma, x_tau1, boundary_sup)?;
    report.horizon = Some(horizon);
    report.min_gap = rho;
    Ok(report)
}

/// As [`theorem2_estimate`] but bounding `G(t, s)` for every `s`.
pub fn theorem3_estimate(
    spec: &ValidatedSpec,
    horizon: f64,
    t_grid: &[f64],
    opts: &MeshOptions,
) -> Result<EstimateReport> {
    let (sigma, rho, hyp) = sigma_on(spec, horizon)?;
    let ke = estimate_k(spec, horizon, t_grid, opts)?;
    let mut report = theorem3_constants(ke.k, sigma, hyp.m_sup, hyp.q, spec.terms.len())?;
    report.horizon = Some(horizon);
    report.min_gap = rho;
    Ok(report)
}

/// `(1 + |B_p|) exp(integral over [s, t] of sum_i |A_i|)` for `s <= t`
/// with no impulse point in `(s, t)`, where `tau_p` is the first impulse
/// point at or after `t`.
pub fn gronwall_bound(spec: &ValidatedSpec, s: f64, t: f64) -> Result<f64> {
    if !(s <= t) || !(s >= 0.0) {
        return Err(Error::arg("need 0 <= s <= t"));
    }
    let imp = &spec.impulses;
    let p = imp.points.partition_point(|&x| x < t);
    if let Some(&tau) = imp.points[..p].iter().rev().find(|&&x| x > s) {
        return Err(Error::StraddlesImpulse { s, t, tau });
    }
    let b = *imp
        .multipliers
        .get(p)
        .ok_or_else(|| Error::arg(format!("no impulse point at or after {t}")))?;
    let mass: f64 = spec.terms.iter().map(|term| term.coefficient.integral(s, t, Integrand::Abs)).sum();
    Ok((1.0 + math::abs(b)) * math::exp(mass))
}

/// Bound on `|x(t)|` implied by the variation-of-constants formula and the
/// `G` estimate in `report`, for inputs with `|r| <= sup_forcing` and
/// `|alpha_j| <= sup_jump`.
pub fn input_response_bound(
    spec: &ValidatedSpec,
    report: &EstimateReport,
    horizon: f64,
    sup_forcing: f64,
    sup_jump: f64,
) -> f64 {
    let (n, nu, k) = (report.n, report.nu, report.k);
    let delta = spec.terms.iter().map(|t| t.delay.max_lag_on(0.0, horizon)).fold(0.0, f64::max);
    let phi_sup = if delta > 0.0 { spec.history.sup_abs_on(-delta, 0.0) } else { 0.0 };
    let history: f64 = spec
        .terms
        .iter()
        .map(|t| t.coefficient.sup_abs_on(0.0, delta.min(horizon)) * phi_sup * n / nu * math::exp(nu * delta))
        .sum();
    n * math::abs(spec.initial_value) + n * sup_forcing / nu + k * sup_jump + history
}

/// What an estimate is checked against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimateTarget {
    /// `X(t) = G(t, 0)`.
    Fundamental,
    /// `G(t, s)` for the given `s`.
    Column(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyReport {
    pub pass: bool,
    /// Smallest `N exp(-nu (t - s)) - |G(t, s)|` seen (left limits included).
    pub worst_margin: f64,
    pub at: f64,
    pub checked: usize,
}

/// Checks `|G(t, s)| <= N exp(-nu (t - s)) + tolerance` at every grid time
/// `t >= s`, using both the value and the limit from the left.
pub fn verify_exponential_estimate(
    spec: &ValidatedSpec,
    report: &EstimateReport,
    target: EstimateTarget,
    grid: &[f64],
    tolerance: f64,
    opts: &MeshOptions,
) -> Result<VerifyReport> {
    let s = match target {
        EstimateTarget::Fundamental => 0.0,
        EstimateTarget::Column(s) => s,
    };
    let times: Vec<f64> = grid.iter().copied().filter(|&t| t >= s).collect();
    let end = times.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(end > s) {
        return Err(Error::arg("grid has no time after the column start"));
    }
    let mut cache = ColumnCache::new(spec, end, Kind::Impulsive, *opts).with_nodes(&times);
    let col = cache.column(s)?;
    let mut worst = f64::INFINITY;
    let mut at = s;
    for &t in &times {
        let bound = report.n * math::exp(-report.nu * (t - s));
        let v = col.eval(t).unwrap_or(f64::NAN);
        let vl = if t > s { col.eval_left(t).unwrap_or(f64::NAN) } else { v };
        let margin = bound - math::abs(v).max(math::abs(vl));
        if !(margin >= worst) {
            worst = margin;
            at = t;
        }
    }
    Ok(VerifyReport { pass: worst >= -tolerance, worst_margin: worst, at, checked: times.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fundamental::fundamental_solution;
    use crate::model::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn halving(horizon_count: usize) -> ValidatedSpec {
        validate(
            ProblemSpec::new(1.0)
                .with_term(DelayTerm::constant(1.0, 0.0))
                .with_impulses(ImpulseSchedule::periodic(1.0, horizon_count, 0.5)),
        )
        .unwrap()
    }

    fn grid(end: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|i| end * i as f64 / n as f64).collect()
    }

    #[test]
    fn exponent_arithmetic() {
        assert!((decay_exponent(2.0, 1.0).unwrap() - core::f64::consts::LN_2).abs() < 1e-15);
        assert!((decay_exponent(1.5, 0.5).unwrap() - 2.0 * 3f64.ln()).abs() < 1e-14);
        assert!(decay_exponent(1.0, 1.0).is_err());
        assert!(decay_exponent(2.0, 0.0).is_err());
        assert!(exponential_constants(0.5, 1.0, 1.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn exponent_falls_as_k_grows(k in 1.001f64..1e3, dk in 1e-3f64..10.0, sigma in 0.1f64..5.0) {
            prop_assert!(decay_exponent(k + dk, sigma).unwrap() < decay_exponent(k, sigma).unwrap());
        }

        #[test]
        fn gronwall_grows_in_t(s in 0.0f64..0.3, a in 0.01f64..0.3, b in 0.0f64..0.3) {
            let spec = validate(
                ProblemSpec::new(1.0)
                    .with_term(DelayTerm::constant(-0.8, 0.2))
                    .with_impulses(ImpulseSchedule::homogeneous(vec![1.0], vec![-2.0])),
            ).unwrap();
            let (t1, t2) = (s + a, s + a + b);
            prop_assert!(gronwall_bound(&spec, s, t1).unwrap() <= gronwall_bound(&spec, s, t2).unwrap());
        }
    }

    #[test]
    fn theorem3_arithmetic() {
        let r = theorem3_constants(2.0, 1.0, 1.0 / 6.0, 1.0, 1).unwrap();
        assert!((r.nu - core::f64::consts::LN_2).abs() < 1e-15);
        assert!((r.n - 7.0 / 6.0 * 8.0 * core::f64::consts::E).abs() < 1e-12);
        let k: f64 = 1.7;
        let r = theorem3_constants(k, 0.8, 0.0, 0.0, 2).unwrap();
        assert!((r.n - k.powi(3) / (k - 1.0).powi(2)).abs() < 1e-12);
        assert_eq!(r.provenance, Provenance::Theorem3);
    }

    #[test]
    fn k_without_impulses_is_floored() {
        let spec = validate(ProblemSpec::new(1.0).with_term(DelayTerm::constant(1.0, 0.2))).unwrap();
        let ke = estimate_k(&spec, 2.0, &grid(2.0, 10), &MeshOptions::default()).unwrap();
        assert_eq!(ke.raw_max, 0.0);
        assert_eq!(ke.k, 1.0 + 1e-9);
    }

    #[test]
    fn k_for_halving_decay() {
        let spec = halving(10);
        let ke = estimate_k(&spec, 10.0, &grid(10.0, 100), &MeshOptions::default()).unwrap();
        // sum_{m < 10} (1 / 2e)^m, reached at t = 10
        let q = 0.5 * (-1f64).exp();
        let want = (1.0 - q.powi(10)) / (1.0 - q);
        assert!((ke.k - want).abs() < 1e-6, "{} {want}", ke.k);
        assert_eq!(ke.at, 10.0);
    }

    #[test]
    fn sign_changing_example_fails_hypotheses() {
        let points: Vec<f64> = (1..=6).map(|j| j as f64 / 3.0).collect();
        let spec = validate(
            ProblemSpec::new(1.0)
                .with_term(DelayTerm::constant(1.0, 1.0 / 3.0))
                .with_impulses(ImpulseSchedule::homogeneous(points, vec![1.0 / 6.0; 6])),
        )
        .unwrap();
        assert!(matches!(
            estimate_k(&spec, 2.0, &grid(2.0, 20), &MeshOptions::default()),
            Err(Error::HypothesesNotMet(_))
        ));
    }

    #[test]
    fn theorem2_chain_on_halving_decay() {
        let spec = halving(20);
        let opts = MeshOptions::default();
        let g = grid(20.0, 400);
        let report = theorem2_estimate(&spec, 20.0, &g, &opts).unwrap();
        assert!((report.nu - (1.0 + 2f64.ln())).abs() < 1e-9);
        assert_eq!(report.sigma, Some(1.0));
        let v = verify_exponential_estimate(&spec, &report, EstimateTarget::Fundamental, &g, 1e-9, &opts).unwrap();
        assert!(v.pass, "{v:?}");
        let inflated = EstimateReport { nu: 10.0 * report.nu, ..report };
        let v = verify_exponential_estimate(&spec, &inflated, EstimateTarget::Fundamental, &g, 1e-9, &opts).unwrap();
        assert!(!v.pass && v.worst_margin < 0.0);

        let x = fundamental_solution(&spec, 20.0, &opts).unwrap();
        let x1 = x.eval(1.0).unwrap();
        for i in 2..=20 {
            assert!(x.eval(i as f64).unwrap() <= induction_bound(x1, report.k, i) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn theorem3_bound_holds_on_columns() {
        let spec = validate(
            ProblemSpec::new(1.0)
                .with_term(DelayTerm::constant(0.5, 0.3))
                .with_impulses(ImpulseSchedule::periodic(1.0, 8, 1.5)),
        )
        .unwrap();
        let opts = MeshOptions::default();
        let g = grid(8.0, 160);
        let report = theorem3_estimate(&spec, 8.0, &g, &opts).unwrap();
        for s in [0.0, 0.5, 2.0, 3.7] {
            let v = verify_exponential_estimate(&spec, &report, EstimateTarget::Column(s), &g, 1e-9, &opts)
                .unwrap();
            assert!(v.pass, "{s} {v:?}");
        }
    }

    #[test]
    fn plain_decay_meets_unit_constants() {
        let spec = validate(ProblemSpec::new(1.0).with_term(DelayTerm::constant(1.0, 0.0))).unwrap();
        let report = EstimateReport {
            k: 2.0,
            nu: 1.0,
            n: 1.0,
            sigma: None,
            horizon: None,
            min_gap: None,
            provenance: Provenance::Fitted,
        };
        let v = verify_exponential_estimate(&spec, &report, EstimateTarget::Fundamental, &grid(5.0, 50), 1e-12, &MeshOptions::default())
            .unwrap();
        assert!(v.pass && v.worst_margin.abs() < 1e-12, "{v:?}");
    }

    #[test]
    fn gronwall_cases() {
        let spec = validate(
            ProblemSpec::new(1.0)
                .with_term(DelayTerm::constant(1.0, 1.0 / 3.0))
                .with_impulses(ImpulseSchedule::homogeneous(vec![1.0 / 3.0, 2.0 / 3.0], vec![1.0 / 6.0; 2])),
        )
        .unwrap();
        let b = gronwall_bound(&spec, 0.4, 0.6).unwrap();
        assert!((b - 7.0 / 6.0 * 0.2f64.exp()).abs() < 1e-14);
        assert!(matches!(gronwall_bound(&spec, 0.2, 0.5), Err(Error::StraddlesImpulse { .. })));
        assert!(gronwall_bound(&spec, 0.7, 0.9).is_err());
        let col = crate::fundamental::fundamental_function(&spec, 0.4, 2.0 / 3.0, &MeshOptions::default()).unwrap();
        for (t, v) in col.samples() {
            assert!(v.abs() <= gronwall_bound(&spec, 0.4, t).unwrap());
        }
        let flat = validate(
            ProblemSpec::new(1.0).with_impulses(ImpulseSchedule::homogeneous(vec![2.0], vec![-3.0])),
        )
        .unwrap();
        assert_eq!(gronwall_bound(&flat, 0.5, 1.5).unwrap(), 4.0);
    }
}
