use alloc::vec::Vec;

use super::mesh::Mesh;
use crate::model::FunctionDescriptor;

/// Values of a solution before its start time.
#[derive(Debug, Clone, PartialEq)]
pub enum History {
    /// Identically zero, as for fundamental functions.
    Zero,
    Function(FunctionDescriptor),
}

impl History {
    pub(crate) fn eval(&self, u: f64, side: Side) -> f64 {
        match (self, side) {
            (History::Zero, _) => 0.0,
            (History::Function(f), Side::Right) => f.eval(u),
            (History::Function(f), Side::Left) => f.eval_left(u),
        }
    }
}

/// Which one-sided limit to take at a discontinuity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Node data shared by the finished solution and the integrator while it is
/// still filling it in.
#[derive(Debug, Clone, PartialEq, Default)]
pub(crate) struct Track {
    /// Right-continuous values.
    pub values: Vec<f64>,
    /// Limits from the left; equal to `values` except at impulse nodes.
    pub left: Vec<f64>,
    pub slope_right: Vec<f64>,
    pub slope_left: Vec<f64>,
}

impl Track {
    /// Value at `t` in `[nodes[0], nodes[values.len() - 1]]`.
    pub(crate) fn eval(&self, nodes: &[f64], t: f64, side: Side) -> f64 {
        let last = self.values.len() - 1;
        let i = nodes[..=last].partition_point(|&n| n <= t).saturating_sub(1);
        if t == nodes[i] {
            return match side {
                Side::Right => self.values[i],
                Side::Left => self.left[i],
            };
        }
        if i >= last {
            return self.values[last];
        }
        hermite(
            nodes[i],
            nodes[i + 1],
            self.values[i],
            self.left[i + 1],
            self.slope_right[i],
            self.slope_left[i + 1],
            t,
        )
    }
}

#[inline]
pub(crate) fn hermite(t0: f64, t1: f64, y0: f64, y1: f64, d0: f64, d1: f64, t: f64) -> f64 {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let s1 = 1.0 - s;
    let h00 = (1.0 + 2.0 * s) * s1 * s1;
    let h10 = s * s1 * s1;
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
}

/// A solution on a breakpoint-aligned mesh.
///
/// Values are right-continuous: at an impulse node the stored value is the
/// post-jump value and the pre-jump limit is kept separately. Between nodes
/// the solution is the cubic Hermite interpolant of the node values and
/// one-sided derivatives. Before the start time it is the history.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseSolution {
    pub(crate) mesh: Mesh,
    pub(crate) track: Track,
    pub(crate) history: History,
}

impl PiecewiseSolution {
    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn nodes(&self) -> &[f64] {
        self.mesh.nodes()
    }

    /// Right-continuous node values.
    pub fn values(&self) -> &[f64] {
        &self.track.values
    }

    pub fn start(&self) -> f64 {
        self.mesh.start()
    }

    pub fn end(&self) -> f64 {
        self.mesh.end()
    }

    pub fn history(&self) -> &History {
        &self.history
    }

    pub fn is_impulse(&self, node: usize) -> bool {
        self.mesh.impulse_at(node).is_some()
    }

    /// `x(tau - 0)` at an impulse node, `None` elsewhere.
    pub fn left_limit(&self, node: usize) -> Option<f64> {
        self.mesh.impulse_at(node).map(|_| self.track.left[node])
    }

    /// Left limits at every node (equal to the value away from impulses).
    pub fn left_values(&self) -> &[f64] {
        &self.track.left
    }

    /// Right-continuous value at `t`, or `None` past the end.
    pub fn eval(&self, t: f64) -> Option<f64> {
        self.eval_side(t, Side::Right)
    }

    /// Limit from the left at `t`, or `None` past the end.
    pub fn eval_left(&self, t: f64) -> Option<f64> {
        self.eval_side(t, Side::Left)
    }

    pub(crate) fn eval_side(&self, t: f64, side: Side) -> Option<f64> {
        let start = self.start();
        if t < start || (t == start && side == Side::Left) {
            return Some(self.history.eval(t, side));
        }
        if t > self.end() {
            return None;
        }
        Some(self.track.eval(self.mesh.nodes(), t, side))
    }

    /// `(t, x(t))` at every node, right-continuous.
    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes().iter().copied().zip(self.track.values.iter().copied())
    }

    /// Largest `|x|` over node values and left limits after the start.
    pub fn max_abs(&self) -> f64 {
        self.track
            .values
            .iter()
            .chain(&self.track.left[1..])
            .fold(0.0, |m, v| m.max(crate::math::abs(*v)))
    }

    /// Smallest node value or left limit after the start.
    pub fn min_value(&self) -> f64 {
        self.track.values.iter().chain(&self.track.left[1..]).fold(f64::INFINITY, |m, v| m.min(*v))
    }

    /// Times where the solution changes sign, located on the interpolant by
    /// bisection; a sign flip caused by a jump is reported at the impulse
    /// point.
    pub fn sign_changes(&self) -> Vec<f64> {
        let nodes = self.nodes();
        let tr = &self.track;
        let mut roots = Vec::new();
        for i in 0..nodes.len() {
            if i > 0 && tr.left[i] * tr.values[i] < 0.0 {
                roots.push(nodes[i]);
            }
            if i + 1 == nodes.len() {
                break;
            }
            let (y0, y1) = (tr.values[i], tr.left[i + 1]);
            if y0 * y1 >= 0.0 {
                continue;
            }
            let f = |t: f64| {
                hermite(nodes[i], nodes[i + 1], y0, y1, tr.slope_right[i], tr.slope_left[i + 1], t)
            };
            let (mut lo, mut hi) = (nodes[i], nodes[i + 1]);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if f(mid) * y0 > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        roots
    }
}
