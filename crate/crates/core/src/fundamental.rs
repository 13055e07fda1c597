//! Fundamental solution `X(t)`, fundamental functions `G(t, s)` (with
//! impulses) and `C(t, s)` (impulses removed), and a checker for the product inequalities of `G`.
//!
//! `G(t, s)` solves the homogeneous equation from `s` with `G(s, s) = 1`,
//! zero history below `s` and jumps only at impulse points after `s`. It is
//! zero for `t < s`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::integrator::{solve_unit_column, MeshOptions, PiecewiseSolution};
use crate::model::ValidatedSpec;

/// `X(t) = G(t, 0)` on `[0, horizon]`.
pub fn fundamental_solution(
    spec: &ValidatedSpec,
    horizon: f64,
    opts: &MeshOptions,
) -> Result<PiecewiseSolution> {
    fundamental_function(spec, 0.0, horizon, opts)
}

/// `G(., s)` on `[s, horizon]`.
pub fn fundamental_function(
    spec: &ValidatedSpec,
    s: f64,
    horizon: f64,
    opts: &MeshOptions,
) -> Result<PiecewiseSolution> {
    check_start(s, horizon)?;
    solve_unit_column(spec, s, horizon, true, opts, &[])
}

/// `C(., s)` on `[s, horizon]`: the fundamental function with the impulse
/// schedule ignored.
pub fn cauchy_function(
    spec: &ValidatedSpec,
    s: f64,
    horizon: f64,
    opts: &MeshOptions,
) -> Result<PiecewiseSolution> {
    check_start(s, horizon)?;
    solve_unit_column(spec, s, horizon, false, opts, &[])
}

fn check_start(s: f64, horizon: f64) -> Result<()> {
    if !(s >= 0.0 && s < horizon) {
        return Err(Error::arg(format!("start {s} outside [0, {horizon})")));
    }
    Ok(())
}

/// Which fundamental function a table or cache holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// `G(t, s)`.
    Impulsive,
    /// `C(t, s)`.
    NonImpulsive,
}

/// Columns `G(., s)` (or `C(., s)`) for a list of start times.
#[derive(Debug, Clone)]
pub struct FundamentalTable {
    kind: Kind,
    s_values: Vec<f64>,
    columns: Vec<PiecewiseSolution>,
}

impl FundamentalTable {
    pub fn build(
        spec: &ValidatedSpec,
        s_values: &[f64],
        horizon: f64,
        kind: Kind,
        opts: &MeshOptions,
    ) -> Result<Self> {
        if s_values.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::arg("table start times must be strictly increasing"));
        }
        let columns = s_values
            .iter()
            .map(|&s| {
                check_start(s, horizon)?;
                solve_unit_column(spec, s, horizon, kind == Kind::Impulsive, opts, &[])
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { kind, s_values: s_values.to_vec(), columns })
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn s_values(&self) -> &[f64] {
        &self.s_values
    }

    pub fn columns(&self) -> &[PiecewiseSolution] {
        &self.columns
    }

    /// Value at time `t` of the column started at `s_values[column]`; zero for
    /// `t` before the start, `None` past the horizon.
    pub fn value(&self, t: f64, column: usize) -> Option<f64> {
        let col = &self.columns[column];
        if t < col.start() {
            return Some(0.0);
        }
        col.eval(t)
    }

    /// `(s, t, value)` at every node of every column.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.s_values
            .iter()
            .zip(&self.columns)
            .flat_map(|(&s, col)| col.samples().map(move |(t, v)| (s, t, v)))
    }
}

/// Lazily computed columns keyed by their start time.
///
/// Every column runs to the same horizon, so one solve serves all queries
/// `G(t, s)` with the same `s`.
#[derive(Debug, Clone)]
pub struct ColumnCache<'a> {
    spec: &'a ValidatedSpec,
    horizon: f64,
    kind: Kind,
    opts: MeshOptions,
    extra: Vec<f64>,
    columns: BTreeMap<u64, PiecewiseSolution>,
}

impl<'a> ColumnCache<'a> {
    pub fn new(spec: &'a ValidatedSpec, horizon: f64, kind: Kind, opts: MeshOptions) -> Self {
        Self { spec, horizon, kind, opts, extra: Vec::new(), columns: BTreeMap::new() }
    }

    /// Times added as nodes to every column, so values there are not
    /// interpolated.
    pub fn with_nodes(mut self, nodes: &[f64]) -> Self {
        self.extra = nodes.to_vec();
        self
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn spec(&self) -> &'a ValidatedSpec {
        self.spec
    }

    pub fn column(&mut self, s: f64) -> Result<&PiecewiseSolution> {
        check_start(s, self.horizon)?;
        let key = (s + 0.0).to_bits();
        if !self.columns.contains_key(&key) {
            let col = solve_unit_column(
                self.spec,
                s,
                self.horizon,
                self.kind == Kind::Impulsive,
                &self.opts,
                &self.extra,
            )?;
            self.columns.insert(key, col);
        }
        Ok(&self.columns[&key])
    }

    /// `G(t, s)` (or `C(t, s)`), right-continuous in `t`.
    pub fn value(&mut self, t: f64, s: f64) -> Result<f64> {
        if t < s {
            return Ok(0.0);
        }
        if t == s {
            return Ok(1.0);
        }
        let horizon = self.horizon;
        self.column(s)?.eval(t).ok_or(Error::OutOfRange { t, start: s, end: horizon })
    }

    /// Limit of `G(t, .)` from the left at `s`: `B_j G(t, tau_j)` when `s` is
    /// an impulse point `tau_j <= t`, else `G(t, s)`.
    pub fn value_left_in_s(&mut self, t: f64, s: f64) -> Result<f64> {
        let g = self.value(t, s)?;
        if self.kind == Kind::Impulsive && s <= t {
            if let Some(j) = self.spec.impulses.index_of(s) {
                return Ok(self.spec.impulses.multipliers[j] * g);
            }
        }
        Ok(g)
    }
}

/// Outcome of [`check_lemma1`].
#[derive(Debug, Clone, PartialEq)]
pub enum Lemma1Report {
    /// The hypotheses `A_i >= 0`, `G >= 0`, `X > 0` failed on the computed
    /// grid; the inequalities were not checked.
    HypothesesNotMet(alloc::string::String),
    Checked {
        triples: usize,
        violations: usize,
        /// Smallest `G(t,z) G(z,s) - G(t,s)` seen.
        worst_product_margin: f64,
        /// Smallest `G(t,s) - X(t)/X(s)` seen.
        worst_lower_margin: f64,
    },
}

impl Lemma1Report {
    pub fn passed(&self) -> bool {
        matches!(self, Lemma1Report::Checked { violations: 0, .. })
    }
}

/// Checks `G(t,s) <= G(t,z) G(z,s)` and `G(t,s) >= X(t)/X(s)` on triples
/// `(s, z, t)` with `0 <= s <= z <= t`, up to an additive `tolerance`.
///
/// The hypotheses are verified first on the computed columns (all nodes of
/// every column touched), so the verdict is relative to that grid.
pub fn check_lemma1(
    spec: &ValidatedSpec,
    triples: &[(f64, f64, f64)],
    tolerance: f64,
    opts: &MeshOptions,
) -> Result<Lemma1Report> {
    if let Some(&(s, z, t)) = triples.iter().find(|(s, z, t)| !(0.0 <= *s && s <= z && z <= t)) {
        return Err(Error::arg(format!("triple ({s}, {z}, {t}) is not ordered")));
    }
    let horizon = triples.iter().map(|x| x.2).fold(0.0, f64::max);
    if triples.is_empty() || horizon <= 0.0 {
        return Err(Error::arg("no usable triples"));
    }
    for (i, term) in spec.terms.iter().enumerate() {
        let inf = term.coefficient.inf_on(0.0, horizon);
        if inf < 0.0 {
            return Ok(Lemma1Report::HypothesesNotMet(format!(
                "coefficient of term {} takes the negative value {inf}",
                i + 1
            )));
        }
    }
    let mut cache = ColumnCache::new(spec, horizon, Kind::Impulsive, *opts);
    let x_min = cache.column(0.0)?.values().iter().copied().fold(f64::INFINITY, f64::min);
    if !(x_min > 0.0) {
        return Ok(Lemma1Report::HypothesesNotMet(format!(
            "fundamental solution reaches {x_min}"
        )));
    }
    let mut starts: Vec<f64> = triples.iter().flat_map(|&(s, z, _)| [s, z]).collect();
    starts.sort_by(|a, b| a.total_cmp(b));
    starts.dedup();
    for &s in &starts {
        if s >= horizon {
            continue;
        }
        let g_min = cache.column(s)?.min_value();
        if g_min < -tolerance {
            return Ok(Lemma1Report::HypothesesNotMet(format!(
                "G(., {s}) reaches {g_min}"
            )));
        }
    }

    let mut violations = 0;
    let mut worst_product = f64::INFINITY;
    let mut worst_lower = f64::INFINITY;
    for &(s, z, t) in triples {
        let g_ts = cache.value(t, s)?;
        let product = cache.value(t, z)? * cache.value(z, s)?;
        let ratio = cache.value(t, 0.0)? / cache.value(s, 0.0)?;
        let m1 = product - g_ts;
        let m2 = g_ts - ratio;
        if m1 < -tolerance || m2 < -tolerance {
            violations += 1;
        }
        worst_product = worst_product.min(m1);
        worst_lower = worst_lower.min(m2);
    }
    Ok(Lemma1Report::Checked {
        triples: triples.len(),
        violations,
        worst_product_margin: worst_product,
        worst_lower_margin: worst_lower,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::*;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sign_example() -> ValidatedSpec {
        let points: Vec<f64> = (1..=12).map(|j| j as f64 / 3.0).collect();
        validate(
            ProblemSpec::new(1.0)
                .with_term(DelayTerm::constant(1.0, 1.0 / 3.0))
                .with_impulses(ImpulseSchedule::homogeneous(points, vec![1.0 / 6.0; 12])),
        )
        .unwrap()
    }

    fn ode(a: f64, impulses: ImpulseSchedule) -> ValidatedSpec {
        validate(ProblemSpec::new(1.0).with_term(DelayTerm::constant(a, 0.0)).with_impulses(impulses))
            .unwrap()
    }

    #[test]
    fn fundamental_solution_of_sign_example() {
        let x = fundamental_solution(&sign_example(), 1.0, &MeshOptions::default()).unwrap();
        assert!((x.eval(0.4).unwrap() - 0.1).abs() < 1e-12);
        assert!((x.eval(0.6).unwrap() + 0.1).abs() < 1e-12);
    }

    #[test]
    fn fundamental_solution_of_plain_decay() {
        let x = fundamental_solution(&ode(1.0, ImpulseSchedule::empty()), 1.0, &MeshOptions::default())
            .unwrap();
        assert!((x.eval(1.0).unwrap() - 0.36787944117144233).abs() < 1e-12);
    }

    #[test]
    fn columns_start_at_one_and_vanish_before() {
        let spec = sign_example();
        let mut cache = ColumnCache::new(&spec, 3.0, Kind::Impulsive, MeshOptions::default());
        for s in [0.0, 0.2, 1.0 / 3.0, 1.7] {
            assert_eq!(cache.column(s).unwrap().values()[0], 1.0);
            assert_eq!(cache.value(s, s).unwrap(), 1.0);
            assert_eq!(cache.value(s - 0.1, s).unwrap(), 0.0);
        }
        let table = FundamentalTable::build(&spec, &[0.5], 3.0, Kind::Impulsive, &MeshOptions::default())
            .unwrap();
        assert_eq!(table.value(0.3, 0), Some(0.0));
    }

    #[test]
    fn g_equals_c_without_intervening_impulse() {
        let spec = sign_example();
        let opts = MeshOptions::default();
        let g = fundamental_function(&spec, 0.4, 3.0, &opts).unwrap();
        let c = cauchy_function(&spec, 0.4, 3.0, &opts).unwrap();
        for t in [0.45, 0.5, 0.6, 0.66] {
            assert!((g.eval(t).unwrap() - c.eval(t).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn single_doubling_impulse() {
        let spec = ode(1.0, ImpulseSchedule::homogeneous(vec![1.0], vec![2.0]));
        let g = fundamental_function(&spec, 0.0, 2.0, &MeshOptions::default()).unwrap();
        // 2 e^{-1.5}
        assert!((g.eval(1.5).unwrap() - 0.44626032029685964).abs() < 1e-10);
    }

    #[test]
    fn cauchy_of_one_third_lag() {
        let spec = sign_example();
        let c = cauchy_function(&spec, 0.0, 3.0, &MeshOptions::default()).unwrap();
        for (t, v) in c.samples() {
            if t <= 1.0 / 3.0 {
                assert!((v - 1.0).abs() < 1e-14);
            } else if t <= 2.0 / 3.0 {
                assert!((v - (1.0 - (t - 1.0 / 3.0))).abs() < 1e-12);
            }
        }
        assert!(c.min_value() > 0.0);
        for s in [0.5, 1.0, 2.0] {
            assert!(cauchy_function(&spec, s, 3.0, &MeshOptions::default()).unwrap().min_value() > 0.0);
        }
    }

    #[test]
    fn column_zero_is_the_fundamental_solution() {
        let spec = sign_example();
        let opts = MeshOptions::default();
        let x = fundamental_solution(&spec, 2.0, &opts).unwrap();
        let g = fundamental_function(&spec, 0.0, 2.0, &opts).unwrap();
        assert_eq!(x.nodes(), g.nodes());
        assert_eq!(x.values(), g.values());
    }

    #[test]
    fn rounded_lag_image_lands_on_column_start() {
        // 0.45 - 0.3 rounds to just above 0.15
        let spec = validate(ProblemSpec::new(1.0).with_term(DelayTerm::constant(1.2, 0.3))).unwrap();
        let g = fundamental_function(&spec, 0.15, 0.45, &MeshOptions::default()).unwrap();
        assert_eq!(g.eval(0.45), Some(1.0));
    }

    #[test]
    fn rejects_start_outside_horizon() {
        let spec = sign_example();
        assert!(fundamental_function(&spec, 2.0, 2.0, &MeshOptions::default()).is_err());
        assert!(cauchy_function(&spec, -0.1, 2.0, &MeshOptions::default()).is_err());
    }

    #[test]
    fn left_limit_in_s_at_impulse() {
        let spec = ode(1.0, ImpulseSchedule::homogeneous(vec![1.0], vec![3.0]));
        let mut cache = ColumnCache::new(&spec, 2.0, Kind::Impulsive, MeshOptions::default());
        let at = cache.value(1.5, 1.0).unwrap();
        let before = cache.value(1.5, 1.0 - 1e-7).unwrap();
        assert!((cache.value_left_in_s(1.5, 1.0).unwrap() - before).abs() < 1e-6);
        assert!((cache.value_left_in_s(1.5, 1.0).unwrap() - 3.0 * at).abs() < 1e-15);
    }

    fn random_triples(n: usize, max: f64, seed: u64) -> Vec<(f64, f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let mut v = [rng.random_range(0.0..max), rng.random_range(0.0..max), rng.random_range(0.0..max)];
                v.sort_by(|a, b| a.total_cmp(b));
                (v[0], v[1], v[2])
            })
            .collect()
    }

    #[test]
    fn lemma1_is_equality_for_odes() {
        let spec = ode(0.8, ImpulseSchedule::homogeneous(vec![0.7, 1.5, 2.2], vec![0.5, 2.0, 1.3]));
        let triples = random_triples(30, 3.0, 1);
        let mut cache = ColumnCache::new(&spec, 3.0, Kind::Impulsive, MeshOptions::default());
        for &(s, z, t) in &triples {
            let g = cache.value(t, s).unwrap();
            assert!((g - cache.value(t, z).unwrap() * cache.value(z, s).unwrap()).abs() < 1e-8);
            assert!((g - cache.value(t, 0.0).unwrap() / cache.value(s, 0.0).unwrap()).abs() < 1e-8);
        }
        let report = check_lemma1(&spec, &triples, 1e-8, &MeshOptions::default()).unwrap();
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn lemma1_holds_with_growing_multipliers() {
        let spec = validate(
            ProblemSpec::new(1.0)
                .with_term(DelayTerm::constant(0.5, 0.3))
                .with_impulses(ImpulseSchedule::periodic(1.0, 5, 1.5)),
        )
        .unwrap();
        let report =
            check_lemma1(&spec, &random_triples(100, 5.0, 7), 1e-8, &MeshOptions::default()).unwrap();
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn lemma1_reports_unmet_hypotheses() {
        let report =
            check_lemma1(&sign_example(), &[(0.0, 0.5, 1.0)], 1e-8, &MeshOptions::default()).unwrap();
        assert!(matches!(report, Lemma1Report::HypothesesNotMet(_)));
    }

    #[test]
    fn corollary1_positivity_propagates() {
        // C > 0 (A d = 0.15 <= 1/e) and every B_j >= 1 give G > 0
        let spec = validate(
            ProblemSpec::new(1.0)
                .with_term(DelayTerm::constant(0.5, 0.3))
                .with_impulses(ImpulseSchedule::homogeneous(vec![0.4, 1.1, 2.9], vec![1.0, 2.5, 1.2])),
        )
        .unwrap();
        let opts = MeshOptions::with_step(5e-3);
        let s_grid = [0.0, 0.5, 1.0, 2.0, 3.5];
        let c = FundamentalTable::build(&spec, &s_grid, 4.0, Kind::NonImpulsive, &opts).unwrap();
        let g = FundamentalTable::build(&spec, &s_grid, 4.0, Kind::Impulsive, &opts).unwrap();
        assert!(c.rows().all(|(_, _, v)| v > 0.0));
        assert!(g.rows().all(|(_, _, v)| v > 0.0));
    }
}
