//! Method-of-steps integration on a breakpoint-aligned mesh.
//!
//! Each mesh step is advanced with the classical fourth-order Runge-Kutta
//! method. Delayed values are read from the part of the solution already
//! computed (cubic Hermite between nodes, history before the start). Jumps
//! are assigned at impulse nodes, never integrated.

mod mesh;
mod solution;

pub use mesh::{build_mesh, Mesh, MeshOptions};
pub(crate) use mesh::MeshPlan;
pub use solution::{History, PiecewiseSolution, Side};
pub(crate) use solution::Track;

use crate::error::{Error, Result};
use crate::model::{DelayTerm, FunctionDescriptor, ImpulseSchedule, ValidatedSpec};

/// Solves `spec` on `[0, horizon]`.
pub fn solve(spec: &ValidatedSpec, horizon: f64, opts: &MeshOptions) -> Result<PiecewiseSolution> {
    solve_with_nodes(spec, horizon, opts, &[])
}

/// As [`solve`], with `extra` times added to the mesh as nodes.
pub(crate) fn solve_with_nodes(
    spec: &ValidatedSpec,
    horizon: f64,
    opts: &MeshOptions,
    extra: &[f64],
) -> Result<PiecewiseSolution> {
    let mesh = MeshPlan::for_solve(spec, 0.0, horizon, true, true).build(opts, extra)?;
    let run = Run {
        terms: &spec.terms,
        forcing: (!spec.forcing.is_zero()).then_some(&spec.forcing),
        impulses: Some(&spec.impulses),
        apply_jumps: true,
        initial: spec.initial_value,
    };
    run.integrate(mesh, History::Function(spec.history.clone()))
}

/// Solves the homogeneous equation from `start` with unit value and zero
/// history, applying multipliers only when `with_impulses` is set.
pub(crate) fn solve_unit_column(
    spec: &ValidatedSpec,
    start: f64,
    end: f64,
    with_impulses: bool,
    opts: &MeshOptions,
    extra: &[f64],
) -> Result<PiecewiseSolution> {
    let mesh = MeshPlan::for_solve(spec, start, end, with_impulses, false).build(opts, extra)?;
    let run = Run {
        terms: &spec.terms,
        forcing: None,
        impulses: with_impulses.then_some(&spec.impulses),
        apply_jumps: false,
        initial: 1.0,
    };
    run.integrate(mesh, History::Zero)
}

struct Run<'a> {
    terms: &'a [DelayTerm],
    forcing: Option<&'a FunctionDescriptor>,
    impulses: Option<&'a ImpulseSchedule>,
    apply_jumps: bool,
    initial: f64,
}

/// The current step's state, used for delayed arguments that fall inside it.
#[derive(Clone, Copy)]
struct Stage {
    t0: f64,
    x0: f64,
    t: f64,
    y: f64,
}

impl Run<'_> {
    fn integrate(&self, mesh: Mesh, history: History) -> Result<PiecewiseSolution> {
        let nodes = mesh.nodes();
        let n = nodes.len();
        let mut track = Track {
            values: alloc::vec::Vec::with_capacity(n),
            left: alloc::vec::Vec::with_capacity(n),
            slope_right: alloc::vec::Vec::with_capacity(n),
            slope_left: alloc::vec::Vec::with_capacity(n),
        };
        let start = nodes[0];
        let x_start = self.initial;
        track.values.push(x_start);
        track.left.push(history.eval(start, Side::Left));
        // node 0 has no step before it; replaced once its right slope is known
        track.slope_left.push(0.0);

        let eps = crate::math::merge_eps(nodes[n - 1]);
        let i_now = |t0: f64| nodes.partition_point(|&x| x <= t0) - 1;
        let rhs = |track: &Track, t: f64, side: Side, stage: Stage| -> Result<f64> {
            let mut dx = match self.forcing {
                Some(r) => match side {
                    Side::Right => r.eval(t),
                    Side::Left => r.eval_left(t),
                },
                None => 0.0,
            };
            for term in self.terms {
                let a = match side {
                    Side::Right => term.coefficient.eval(t),
                    Side::Left => term.coefficient.eval_left(t),
                };
                if a == 0.0 {
                    continue;
                }
                let u = snap(term.delay.eval(t), &nodes[..=i_now(stage.t0)], &history, eps);
                let xu = if u > stage.t0 {
                    if u > stage.t + crate::math::merge_eps(stage.t) {
                        return Err(Error::DelayBeyondComputed { t, arg: u });
                    }
                    if stage.t > stage.t0 {
                        stage.x0 + (u - stage.t0) / (stage.t - stage.t0) * (stage.y - stage.x0)
                    } else {
                        stage.x0
                    }
                } else if u > start || (u == start && side == Side::Right) {
                    track.eval(nodes, u, side)
                } else {
                    history.eval(u, side)
                };
                dx -= a * xu;
            }
            Ok(dx)
        };

        for i in 0..n - 1 {
            let (t0, t1) = (nodes[i], nodes[i + 1]);
            let h = t1 - t0;
            let x0 = track.values[i];
            let tm = t0 + 0.5 * h;

            let k1 = rhs(&track, t0, Side::Right, Stage { t0, x0, t: t0, y: x0 })?;
            track.slope_right.push(k1);
            let y2 = x0 + 0.5 * h * k1;
            let k2 = rhs(&track, tm, Side::Right, Stage { t0, x0, t: tm, y: y2 })?;
            let y3 = x0 + 0.5 * h * k2;
            let k3 = rhs(&track, tm, Side::Right, Stage { t0, x0, t: tm, y: y3 })?;
            let y4 = x0 + h * k3;
            let k4 = rhs(&track, t1, Side::Left, Stage { t0, x0, t: t1, y: y4 })?;
            let x_minus = x0 + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            let d_minus = rhs(&track, t1, Side::Left, Stage { t0, x0, t: t1, y: x_minus })?;

            let x_plus = match (mesh.impulse_at(i + 1), self.impulses) {
                (Some(j), Some(imp)) => {
                    let jump = if self.apply_jumps { imp.jumps[j] } else { 0.0 };
                    imp.multipliers[j] * x_minus + jump
                }
                _ => x_minus,
            };
            track.left.push(x_minus);
            track.values.push(x_plus);
            track.slope_left.push(d_minus);
        }
        // the last node has no step after it
        let last_slope = track.slope_left.last().copied().unwrap_or(0.0);
        track.slope_right.push(last_slope);
        track.slope_left[0] = track.slope_right[0];

        Ok(PiecewiseSolution { mesh, track, history })
    }
}

/// Moves a delayed argument onto a computed node or a history kink lying
/// within `eps`, so rounding in `h(t)` cannot pick the wrong side of a
/// discontinuity.
fn snap(u: f64, nodes: &[f64], history: &History, eps: f64) -> f64 {
    let near = |pts: &[f64]| {
        let i = pts.partition_point(|&x| x < u);
        [i.checked_sub(1), Some(i)]
            .into_iter()
            .flatten()
            .filter_map(|j| pts.get(j).copied())
            .find(|&x| crate::math::abs(x - u) <= eps)
    };
    if let Some(x) = near(nodes) {
        return x;
    }
    if let History::Function(f) = history {
        if let Some(x) = near(f.kinks()) {
            return x;
        }
    }
    u
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::*;
    use alloc::vec;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    fn sign_example(x0: f64) -> ProblemSpec {
        let points: Vec<f64> = (1..=9).map(|j| j as f64 / 3.0).collect();
        ProblemSpec::new(x0)
            .with_term(DelayTerm::constant(1.0, 1.0 / 3.0))
            .with_impulses(ImpulseSchedule::homogeneous(points, vec![1.0 / 6.0; 9]))
    }

    #[test]
    fn reproduces_sign_changing_example() {
        let spec = validate(sign_example(1.0)).unwrap();
        let sol = solve(&spec, 1.0, &MeshOptions::default()).unwrap();
        for (t, x) in sol.samples() {
            let exact = if t < 1.0 / 3.0 {
                1.0
            } else if t < 2.0 / 3.0 {
                1.0 / 6.0 - (t - 1.0 / 3.0)
            } else {
                continue;
            };
            assert!((x - exact).abs() < 1e-12, "t = {t}: {x} vs {exact}");
        }
        let node = sol.nodes().iter().position(|&t| t == 2.0 / 3.0).unwrap();
        assert!((sol.left_limit(node).unwrap() + 1.0 / 6.0).abs() < 1e-12);
        assert!((sol.values()[node] + 1.0 / 36.0).abs() < 1e-12);
        assert_eq!(sol.left_limit(node - 1), None);
    }

    #[test]
    fn trivial_problem_is_constant() {
        let spec = validate(ProblemSpec::new(1.0)).unwrap();
        let sol = solve(&spec, 2.0, &MeshOptions::with_step(0.1)).unwrap();
        assert!(sol.values().iter().all(|&x| x == 1.0));
        assert_eq!(sol.eval(1.234), Some(1.0));
        assert_eq!(sol.eval(2.5), None);
    }

    #[test]
    fn history_below_start() {
        let spec = validate(
            ProblemSpec::new(1.0)
                .with_term(DelayTerm::constant(1.0, 0.5))
                .with_history(FunctionDescriptor::Constant(2.0)),
        )
        .unwrap();
        let sol = solve(&spec, 1.0, &MeshOptions::default()).unwrap();
        assert_eq!(sol.eval(-0.25), Some(2.0));
        assert_eq!(sol.eval_left(0.0), Some(2.0));
        assert_eq!(sol.eval(0.0), Some(1.0));
        // x' = -2 on [0, 1/2]
        assert!((sol.eval(0.5).unwrap() - 0.0).abs() < 1e-13);
    }

    #[test]
    fn exponential_decay() {
        let spec = validate(ProblemSpec::new(1.0).with_term(DelayTerm::constant(1.0, 0.0))).unwrap();
        let sol = solve(&spec, 1.0, &MeshOptions::default()).unwrap();
        assert!((sol.eval(1.0).unwrap() - libm::exp(-1.0)).abs() < 1e-13);
        // between nodes the Hermite interpolant is accurate to O(h^4)
        assert!((sol.eval(0.12345).unwrap() - libm::exp(-0.12345)).abs() < 1e-13);
    }

    #[test]
    fn unit_multipliers_match_impulse_free_solve() {
        let base = ProblemSpec::new(0.7)
            .with_term(DelayTerm::constant(0.8, 0.45))
            .with_forcing(FunctionDescriptor::PiecewiseConstant {
                breakpoints: vec![0.9],
                values: vec![0.3, -0.2],
            })
            .with_history(FunctionDescriptor::Constant(-0.4));
        let with = validate(
            base.clone()
                .with_impulses(ImpulseSchedule::homogeneous(vec![0.5, 1.3, 2.2], vec![1.0; 3])),
        )
        .unwrap();
        let without = validate(base).unwrap();
        let a = solve(&with, 3.0, &MeshOptions::default()).unwrap();
        let b = solve(&without, 3.0, &MeshOptions::default()).unwrap();
        for &t in a.nodes() {
            assert!((a.eval(t).unwrap() - b.eval(t).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn fourth_order_convergence() {
        // x' = -x(t - 1) with unit history: the exact solution is
        // sum_k (-1)^k (t - k + 1)^k / k! over the terms with t - k + 1 > 0,
        // of degree 5 and 6 on [4, 6] where RK4 is no longer exact.
        let exact = |t: f64| {
            let mut sum = 0.0;
            let mut k = 0u32;
            while t - (k as f64 - 1.0) > 0.0 {
                let u = t - (k as f64 - 1.0);
                let term = (1..=k).fold(1.0, |acc, j| acc * u / j as f64);
                sum += if k.is_multiple_of(2) { term } else { -term };
                k += 1;
            }
            sum
        };
        let spec = validate(
            ProblemSpec::new(1.0)
                .with_term(DelayTerm::constant(1.0, 1.0))
                .with_history(FunctionDescriptor::Constant(1.0)),
        )
        .unwrap();
        let err = |h: f64| {
            let sol = solve(&spec, 6.0, &MeshOptions::with_step(h)).unwrap();
            sol.samples().map(|(t, x)| (x - exact(t)).abs()).fold(0.0, f64::max)
        };
        let (e1, e2) = (err(0.1), err(0.05));
        assert!(e1 > 1e-13, "reference case became exact: {e1}");
        assert!(e1 / e2 >= 8.0, "{e1} {e2}");
    }

    #[test]
    fn delayed_argument_inside_current_step() {
        // lag smaller than the step: the blend inside the step must still
        // converge to exp decay for a vanishing lag
        let spec = validate(ProblemSpec::new(1.0).with_term(DelayTerm::constant(1.0, 1e-4))).unwrap();
        let sol = solve(&spec, 1.0, &MeshOptions::with_step(1e-2)).unwrap();
        assert!((sol.eval(1.0).unwrap() - libm::exp(-1.0)).abs() < 1e-3);
    }

    proptest! {
        #[test]
        fn superposition(
            c1 in -2.0f64..2.0, c2 in -2.0f64..2.0,
            x1 in -1.0f64..1.0, x2 in -1.0f64..1.0,
            r1 in -1.0f64..1.0, r2 in -1.0f64..1.0,
            p1 in -1.0f64..1.0, p2 in -1.0f64..1.0,
            a1 in -1.0f64..1.0, a2 in -1.0f64..1.0,
        ) {
            let make = |x0: f64, r: f64, phi: f64, alpha: f64| {
                validate(
                    ProblemSpec::new(x0)
                        .with_term(DelayTerm::constant(0.9, 0.35))
                        .with_term(DelayTerm::constant(-0.3, 0.8))
                        .with_forcing(FunctionDescriptor::PiecewiseConstant {
                            breakpoints: vec![1.1],
                            values: vec![r, 2.0 * r],
                        })
                        .with_history(FunctionDescriptor::Constant(phi))
                        .with_impulses(ImpulseSchedule::new(
                            vec![0.6, 1.7],
                            vec![1.4, -0.5],
                            vec![alpha, -alpha],
                        )),
                )
                .unwrap()
            };
            let opts = MeshOptions::with_step(0.01);
            let s1 = solve(&make(x1, r1, p1, a1), 2.5, &opts).unwrap();
            let s2 = solve(&make(x2, r2, p2, a2), 2.5, &opts).unwrap();
            let sc = solve(
                &make(c1 * x1 + c2 * x2, c1 * r1 + c2 * r2, c1 * p1 + c2 * p2, c1 * a1 + c2 * a2),
                2.5,
                &opts,
            )
            .unwrap();
            prop_assert_eq!(s1.nodes(), sc.nodes());
            let scale = sc.max_abs().max(1.0);
            for i in 0..sc.nodes().len() {
                let lin = c1 * s1.values()[i] + c2 * s2.values()[i];
                prop_assert!((sc.values()[i] - lin).abs() <= 1e-10 * scale);
            }
        }
    }
}
