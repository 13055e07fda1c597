//! Variation of constants: the solution as `X(t) x(0)` plus integrals of
//! `G(t, s)` against the forcing and the history, plus the jump sum.
//!
//! The integrals use composite Simpson on pieces bounded by every point where
//! `G(t, .)` or the integrand loses smoothness, so the rule keeps its order
//! on each piece.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fundamental::{ColumnCache, Kind};
use crate::integrator::{solve_with_nodes, MeshOptions};
use crate::math;
use crate::model::{FunctionDescriptor, ValidatedSpec};

/// What to evaluate and how finely.
#[derive(Debug, Clone)]
pub struct RepresentationInput<'a> {
    pub spec: &'a ValidatedSpec,
    pub target_times: Vec<f64>,
    /// Largest spacing of quadrature nodes in `s`.
    pub quadrature_step: f64,
}

/// `phi(z)` for `z < 0`, zero otherwise; `left` takes the limit from below.
fn history_term(phi: &FunctionDescriptor, z: f64, left: bool) -> f64 {
    if z < 0.0 {
        if left { phi.eval_left(z) } else { phi.eval(z) }
    } else if z == 0.0 && left {
        phi.eval_left(0.0)
    } else {
        0.0
    }
}

/// `r(s) - sum_i A_i(s) phi(h_i(s))`, the factor multiplying `G(t, s)`.
fn source(spec: &ValidatedSpec, s: f64, left: bool) -> f64 {
    let mut v = if left { spec.forcing.eval_left(s) } else { spec.forcing.eval(s) };
    if spec.history.is_zero() {
        return v;
    }
    for term in &spec.terms {
        let a = if left { term.coefficient.eval_left(s) } else { term.coefficient.eval(s) };
        if a != 0.0 {
            v -= a * history_term(&spec.history, term.delay.eval(s), left);
        }
    }
    v
}

/// Sorted points in `[0, end]` where the integrand in `s` may lose
/// smoothness. `fixed` points are kept exactly when near neighbours merge.
fn quadrature_breaks(spec: &ValidatedSpec, targets: &[f64], end: f64, depth: usize) -> Vec<f64> {
    let inside = |t: f64| (0.0..=end).contains(&t);
    let mut pts: Vec<(f64, bool)> = Vec::new();
    pts.push((0.0, true));
    pts.extend(targets.iter().map(|&t| (t, true)));
    let taus: Vec<f64> = spec.impulses.points.iter().copied().filter(|&p| p <= end).collect();
    pts.extend(taus.iter().map(|&t| (t, true)));
    let mut loose: Vec<f64> = Vec::new();
    loose.extend_from_slice(spec.forcing.kinks());
    for term in &spec.terms {
        loose.extend_from_slice(term.coefficient.kinks());
        if let crate::model::DeviationDescriptor::Tabulated { abscissae, .. } = &term.delay {
            loose.extend_from_slice(abscissae);
        }
        // h_i(s) crosses 0 or a history kink
        if !spec.history.is_zero() {
            loose.extend(term.delay.preimage(0.0));
            for &k in spec.history.kinks() {
                if k < 0.0 {
                    loose.extend(term.delay.preimage(k));
                }
            }
        }
    }
    // images of targets and impulse points under the deviations
    let mut frontier: Vec<f64> = targets.iter().chain(&taus).copied().collect();
    for _ in 0..depth {
        let mut next = Vec::new();
        for &x in &frontier {
            for term in &spec.terms {
                if term.delay.is_zero_lag() {
                    continue;
                }
                let y = term.delay.eval(x);
                if y > 0.0 && y < x {
                    next.push(y);
                }
            }
        }
        next.sort_by(|a, b| a.total_cmp(b));
        next.dedup();
        if next.is_empty() {
            break;
        }
        loose.extend_from_slice(&next);
        frontier = next;
    }
    pts.extend(loose.into_iter().filter(|&t| inside(t)).map(|t| (t, false)));

    let eps = math::merge_eps(end);
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, bool)> = Vec::with_capacity(pts.len());
    for (t, fixed) in pts {
        match out.last_mut() {
            Some(last) if t - last.0 <= eps => {
                if fixed && !last.1 {
                    *last = (t, true);
                }
            }
            _ => out.push((t, fixed)),
        }
    }
    out.into_iter().map(|p| p.0).collect()
}

/// Composite Simpson weights for `n >= 2` equal subintervals of width `h`;
/// three-eighths on the last three when `n` is odd.
fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = alloc::vec![0.0; n + 1];
    let even = if n.is_multiple_of(2) { n } else { n - 3 };
    for i in (0..even).step_by(2) {
        w[i] += h / 3.0;
        w[i + 1] += 4.0 * h / 3.0;
        w[i + 2] += h / 3.0;
    }
    if even != n {
        let c = 3.0 * h / 8.0;
        w[even] += c;
        w[even + 1] += 3.0 * c;
        w[even + 2] += 3.0 * c;
        w[even + 3] += c;
    }
    w
}

/// A smooth piece `[a, b]` of the quadrature grid.
struct Piece {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

fn pieces(breaks: &[f64], step: f64) -> Vec<Piece> {
    breaks
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let n = (math::ceil((b - a) / step - 1e-9) as usize).max(2);
            let h = (b - a) / n as f64;
            let nodes = (0..=n).map(|i| if i == n { b } else { a + h * i as f64 }).collect();
            Piece { nodes, weights: simpson_weights(n, h) }
        })
        .collect()
}

/// The right-hand side of the variation-of-constants formula at each target
/// time.
pub fn evaluate_representation(input: &RepresentationInput<'_>, opts: &MeshOptions) -> Result<Vec<f64>> {
    let spec = input.spec;
    let step = input.quadrature_step;
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::arg("quadrature step must be positive"));
    }
    if input.target_times.iter().any(|&t| !(t >= 0.0) || !t.is_finite()) {
        return Err(Error::arg("target times must be finite and nonnegative"));
    }
    let end = input.target_times.iter().copied().fold(0.0, f64::max);
    let taus: Vec<f64> = spec.impulses.points.iter().copied().filter(|&p| p <= end).collect();
    if let Some(gap) = core::iter::once(0.0)
        .chain(taus.iter().copied())
        .collect::<Vec<_>>()
        .windows(2)
        .map(|w| w[1] - w[0])
        .reduce(f64::min)
    {
        if step > gap {
            return Err(Error::QuadratureTooCoarse { step, gap });
        }
    }
    if end == 0.0 {
        return Ok(alloc::vec![spec.initial_value; input.target_times.len()]);
    }

    let breaks = quadrature_breaks(spec, &input.target_times, end, opts.propagation_depth);
    let pieces = pieces(&breaks, step);
    let mut cache =
        ColumnCache::new(spec, end, Kind::Impulsive, *opts).with_nodes(&input.target_times);
    let has_source = !spec.forcing.is_zero() || !spec.history.is_zero();

    let mut out = Vec::with_capacity(input.target_times.len());
    for &t in &input.target_times {
        let mut x = cache.value(t, 0.0)? * spec.initial_value;
        for (j, &tau) in spec.impulses.points.iter().enumerate() {
            let alpha = spec.impulses.jumps[j];
            if tau <= t && tau > 0.0 && alpha != 0.0 {
                x += cache.value(t, tau)? * alpha;
            }
        }
        if has_source {
            for piece in pieces.iter().take_while(|p| p.nodes[p.nodes.len() - 1] <= t) {
                let last = piece.nodes.len() - 1;
                for (i, (&s, &w)) in piece.nodes.iter().zip(&piece.weights).enumerate() {
                    let left = i == last;
                    let f = source(spec, s, left);
                    if f == 0.0 {
                        continue;
                    }
                    let g = if left { cache.value_left_in_s(t, s)? } else { cache.value(t, s)? };
                    x += w * g * f;
                }
            }
        }
        out.push(x);
    }
    Ok(out)
}

/// One target time of a representation check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualRow {
    pub t: f64,
    pub direct: f64,
    pub representation: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub rows: Vec<ResidualRow>,
    pub max_error: f64,
}

/// Compares the formula with a direct solve at `horizon * i / 10`,
/// `i = 1..=10`.
pub fn representation_residual(
    spec: &ValidatedSpec,
    horizon: f64,
    opts: &MeshOptions,
    quadrature_step: f64,
) -> Result<ResidualReport> {
    let targets: Vec<f64> = (1..=10).map(|i| horizon * i as f64 / 10.0).collect();
    representation_residual_at(spec, &targets, opts, quadrature_step)
}

/// As [`representation_residual`] on chosen target times.
pub fn representation_residual_at(
    spec: &ValidatedSpec,
    targets: &[f64],
    opts: &MeshOptions,
    quadrature_step: f64,
) -> Result<ResidualReport> {
    let horizon = targets.iter().copied().fold(0.0, f64::max);
    if !(horizon > 0.0) {
        return Err(Error::arg("targets must include a positive time"));
    }
    let direct = solve_with_nodes(spec, horizon, opts, targets)?;
    let input = RepresentationInput { spec, target_times: targets.to_vec(), quadrature_step };
    let rep = evaluate_representation(&input, opts)?;
    let rows: Vec<ResidualRow> = targets
        .iter()
        .zip(rep)
        .map(|(&t, representation)| {
            let d = direct.eval(t).unwrap_or(f64::NAN);
            ResidualRow { t, direct: d, representation, abs_error: math::abs(d - representation) }
        })
        .collect();
    let max_error = rows.iter().map(|r| r.abs_error).fold(0.0, f64::max);
    Ok(ResidualReport { rows, max_error })
}
