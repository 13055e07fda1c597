//! Reconstruction of `G(t, s)` from the non-impulsive `C(t, s)`.
//!
//! Three routes: the sum over ordered impulse subsets, a layered recursion
//! over impulse points with polynomial cost, and the product formula that is
//! valid only without delay.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fundamental::{ColumnCache, Kind};
use crate::integrator::MeshOptions;
use crate::model::{ImpulseSchedule, ValidatedSpec};

/// Largest number of impulse points the subset enumeration accepts.
pub const ENUMERATION_CAP: usize = 20;

/// A nonempty strictly increasing set of 1-based impulse indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetChain {
    indices: Vec<usize>,
}

impl SubsetChain {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() || indices.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::arg("chain indices must be nonempty and strictly increasing"));
        }
        Ok(Self { indices })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn min(&self) -> usize {
        self.indices[0]
    }

    pub fn max(&self) -> usize {
        self.indices[self.indices.len() - 1]
    }

    /// Consecutive pairs `(n_i, n_{i-1})`, from the top down; empty for a
    /// single index.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.indices.windows(2).rev().map(|w| (w[1], w[0])).collect()
    }
}

/// Calls `f` on every nonempty subset of `k..=l`, ordered by size and then
/// lexicographically.
fn for_each_chain(k: usize, l: usize, mut f: impl FnMut(&[usize])) {
    let n = l - k + 1;
    let mut buf = Vec::with_capacity(n);
    for r in 1..=n {
        buf.clear();
        buf.extend(k..k + r);
        loop {
            f(&buf);
            // advance to the next r-combination
            let mut i = r;
            while i > 0 && buf[i - 1] == l + 1 - (r - i + 1) {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            buf[i - 1] += 1;
            for j in i..r {
                buf[j] = buf[j - 1] + 1;
            }
        }
    }
}

/// All `2^(l-k+1) - 1` nonempty subsets of `{k, ..., l}`.
pub fn enumerate_chains(k: usize, l: usize) -> Result<Vec<SubsetChain>> {
    if k < 1 || k > l {
        return Err(Error::arg("chain range needs 1 <= k <= l"));
    }
    if l - k + 1 > ENUMERATION_CAP {
        return Err(Error::TooManyImpulses { count: l - k + 1, cap: ENUMERATION_CAP });
    }
    let mut out = Vec::with_capacity((1usize << (l - k + 1)) - 1);
    for_each_chain(k, l, |c| out.push(SubsetChain { indices: c.to_vec() }));
    Ok(out)
}

/// Source of non-impulsive fundamental function values.
pub trait CauchyEvaluator {
    /// `C(t, s)` for `t >= s`.
    fn cauchy(&mut self, t: f64, s: f64) -> Result<f64>;
}

/// `C` from memoized numerical solves.
#[derive(Debug, Clone)]
pub struct NumericCauchy<'a> {
    cache: ColumnCache<'a>,
}

impl<'a> NumericCauchy<'a> {
    /// Columns run to `horizon`; impulse points and `nodes` become mesh
    /// nodes so that values there are not interpolated.
    pub fn new(spec: &'a ValidatedSpec, horizon: f64, opts: MeshOptions, nodes: &[f64]) -> Self {
        let mut extra: Vec<f64> = spec.impulses.points.clone();
        extra.extend_from_slice(nodes);
        let cache = ColumnCache::new(spec, horizon, Kind::NonImpulsive, opts).with_nodes(&extra);
        Self { cache }
    }
}

impl CauchyEvaluator for NumericCauchy<'_> {
    fn cauchy(&mut self, t: f64, s: f64) -> Result<f64> {
        self.cache.value(t, s)
    }
}

/// `C` from a closure, with `C(u, u) = 1` and `C(u, v) = 0` for `u < v`
/// enforced here.
pub struct FnCauchy<F>(pub F);

impl<F: FnMut(f64, f64) -> f64> CauchyEvaluator for FnCauchy<F> {
    fn cauchy(&mut self, t: f64, s: f64) -> Result<f64> {
        Ok(if t < s {
            0.0
        } else if t == s {
            1.0
        } else {
            (self.0)(t, s)
        })
    }
}

/// 1-based `(k, l)` with `tau_{k-1} <= s < tau_k` and `tau_l <= t < tau_{l+1}`,
/// or `None` when no impulse lies in `(s, t]`.
fn locate(impulses: &ImpulseSchedule, t: f64, s: f64) -> Result<Option<(usize, usize)>> {
    if !(s >= 0.0) || !t.is_finite() {
        return Err(Error::arg("start must be nonnegative and times finite"));
    }
    if t < s {
        return Err(Error::arg("t must not precede s"));
    }
    let k = impulses.first_after(s) + 1;
    let l = impulses.count_up_to(t);
    Ok((k <= l).then_some((k, l)))
}

/// Values shared by the subset sum and the recursion: `C(t, s)`,
/// `C(t, tau_q)`, `C(tau_q, s)` and `C(tau_q, tau_p)` for `k <= p < q <= l`.
struct Table {
    k: usize,
    c_ts: f64,
    to_t: Vec<f64>,
    from_s: Vec<f64>,
    between: Vec<Vec<f64>>,
    factor: Vec<f64>,
}

impl Table {
    fn gather<C: CauchyEvaluator + ?Sized>(
        c: &mut C,
        impulses: &ImpulseSchedule,
        t: f64,
        s: f64,
        k: usize,
        l: usize,
    ) -> Result<Self> {
        let tau = |q: usize| impulses.points[q - 1];
        let c_ts = c.cauchy(t, s)?;
        let mut to_t = Vec::with_capacity(l - k + 1);
        let mut from_s = Vec::with_capacity(l - k + 1);
        let mut between = Vec::with_capacity(l - k + 1);
        for q in k..=l {
            to_t.push(c.cauchy(t, tau(q))?);
            from_s.push(c.cauchy(tau(q), s)?);
            between.push((k..q).map(|p| c.cauchy(tau(q), tau(p))).collect::<Result<Vec<_>>>()?);
        }
        let factor = (k..=l).map(|q| impulses.multipliers[q - 1] - 1.0).collect();
        Ok(Self { k, c_ts, to_t, from_s, between, factor })
    }

    fn between(&self, q: usize, p: usize) -> f64 {
        self.between[q - self.k][p - self.k]
    }
}

/// `G(t, s)` as `C(t, s)` plus one term per ordered subset of the impulse
/// points in `(s, t]`. Exponential in their number; capped at
/// [`ENUMERATION_CAP`].
pub fn expansion_g<C: CauchyEvaluator + ?Sized>(
    c: &mut C,
    impulses: &ImpulseSchedule,
    t: f64,
    s: f64,
) -> Result<f64> {
    let Some((k, l)) = locate(impulses, t, s)? else {
        return c.cauchy(t, s);
    };
    if l - k + 1 > ENUMERATION_CAP {
        return Err(Error::TooManyImpulses { count: l - k + 1, cap: ENUMERATION_CAP });
    }
    let tab = Table::gather(c, impulses, t, s, k, l)?;
    let mut sum = tab.c_ts;
    for_each_chain(k, l, |e| {
        let (lo, hi) = (e[0], e[e.len() - 1]);
        let mut term = tab.to_t[hi - k];
        for w in e.windows(2).rev() {
            term *= tab.factor[w[1] - k] * tab.between(w[1], w[0]);
        }
        term *= tab.factor[lo - k] * tab.from_s[lo - k];
        sum += term;
    });
    Ok(sum)
}

/// `G(t, s)` by layering over the impulse points: `g_q`, the limit of
/// `G(., s)` from the left at `tau_q`, is built from the earlier `g_p`.
pub fn recursion_g<C: CauchyEvaluator + ?Sized>(
    c: &mut C,
    impulses: &ImpulseSchedule,
    t: f64,
    s: f64,
) -> Result<f64> {
    let Some((k, l)) = locate(impulses, t, s)? else {
        return c.cauchy(t, s);
    };
    let tab = Table::gather(c, impulses, t, s, k, l)?;
    let mut g: Vec<f64> = Vec::with_capacity(l - k + 1);
    for q in k..=l {
        let mut v = tab.from_s[q - k];
        for p in k..q {
            v += tab.between(q, p) * tab.factor[p - k] * g[p - k];
        }
        g.push(v);
    }
    let mut sum = tab.c_ts;
    for q in k..=l {
        sum += tab.to_t[q - k] * tab.factor[q - k] * g[q - k];
    }
    Ok(sum)
}

/// `G(t, s)` as an alternating product of `C` factors and multipliers. Only
/// valid without delay; a spec with a nonzero lag is refused.
pub fn ode_product_g<C: CauchyEvaluator + ?Sized>(
    spec: &ValidatedSpec,
    c: &mut C,
    t: f64,
    s: f64,
) -> Result<f64> {
    if !spec.is_delay_free() {
        return Err(Error::DelayPresent);
    }
    let impulses = &spec.impulses;
    let Some((k, l)) = locate(impulses, t, s)? else {
        return c.cauchy(t, s);
    };
    let tau = |q: usize| impulses.points[q - 1];
    let b = |q: usize| impulses.multipliers[q - 1];
    let mut prod = c.cauchy(t, tau(l))?;
    for j in (k + 1..=l).rev() {
        prod *= b(j) * c.cauchy(tau(j), tau(j - 1))?;
    }
    Ok(prod * b(k) * c.cauchy(tau(k), s)?)
}

/// One row of a direct-versus-reconstructed comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonRow {
    pub t: f64,
    pub s: f64,
    pub direct: f64,
    /// `None` when the pair has more impulse points than the enumeration cap.
    pub expansion: Option<f64>,
    pub recursion: f64,
    /// Largest deviation of either reconstruction from the direct solve.
    pub abs_error: f64,
}

/// Compares the direct impulsive solve with both reconstructions from
/// numerically computed `C` on every pair `s <= t` of the grids.
pub fn compare_on_grid(
    spec: &ValidatedSpec,
    t_grid: &[f64],
    s_grid: &[f64],
    opts: &MeshOptions,
) -> Result<Vec<ComparisonRow>> {
    let horizon = t_grid.iter().copied().fold(0.0, f64::max);
    if !(horizon > 0.0) {
        return Err(Error::arg("t grid must contain a positive time"));
    }
    let mut direct = ColumnCache::new(spec, horizon, Kind::Impulsive, *opts).with_nodes(t_grid);
    let mut cauchy = NumericCauchy::new(spec, horizon, *opts, t_grid);
    let mut rows = Vec::new();
    for &s in s_grid {
        for &t in t_grid {
            if t < s {
                continue;
            }
            let d = direct.value(t, s)?;
            let expansion = match expansion_g(&mut cauchy, &spec.impulses, t, s) {
                Ok(v) => Some(v),
                Err(Error::TooManyImpulses { .. }) => None,
                Err(e) => return Err(e),
            };
            let recursion = recursion_g(&mut cauchy, &spec.impulses, t, s)?;
            let abs_error = expansion
                .map_or(0.0, |e| crate::math::abs(e - d))
                .max(crate::math::abs(recursion - d));
            rows.push(ComparisonRow { t, s, direct: d, expansion, recursion, abs_error });
        }
    }
    Ok(rows)
}
