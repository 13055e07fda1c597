use alloc::vec;
use alloc::vec::Vec;

use super::validation::{Location, Violation};

/// Impulse times `tau_j` with multipliers `B_j` and additive jumps `alpha_j`:
/// `x(tau_j) = B_j x(tau_j - 0) + alpha_j`.
///
/// Indices are 0-based in this API; `points[0]` is `tau_1`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ImpulseSchedule {
    pub points: Vec<f64>,
    pub multipliers: Vec<f64>,
    pub jumps: Vec<f64>,
}

impl ImpulseSchedule {
    pub fn new(points: Vec<f64>, multipliers: Vec<f64>, jumps: Vec<f64>) -> Self {
        Self { points, multipliers, jumps }
    }

    /// Schedule with all jumps `alpha_j = 0`.
    pub fn homogeneous(points: Vec<f64>, multipliers: Vec<f64>) -> Self {
        let jumps = vec![0.0; points.len()];
        Self { points, multipliers, jumps }
    }

    /// `tau_j = j * period` for `j = 1..=count`, all with the same multiplier.
    pub fn periodic(period: f64, count: usize, multiplier: f64) -> Self {
        let points = (1..=count).map(|j| j as f64 * period).collect();
        Self::homogeneous(points, vec![multiplier; count])
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index of the first point strictly after `s`.
    pub fn first_after(&self, s: f64) -> usize {
        self.points.partition_point(|&p| p <= s)
    }

    /// Number of points `<= t`.
    pub fn count_up_to(&self, t: f64) -> usize {
        self.points.partition_point(|&p| p <= t)
    }

    /// Index of the point exactly equal to `t`, if any.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let i = self.count_up_to(t);
        (i > 0 && self.points[i - 1] == t).then(|| i - 1)
    }

    /// The same points and multipliers with every jump set to zero.
    pub fn without_jumps(&self) -> Self {
        Self::homogeneous(self.points.clone(), self.multipliers.clone())
    }

    pub(crate) fn check(&self, out: &mut Vec<Violation>) {
        for (i, p) in self.points.iter().enumerate() {
            if !p.is_finite() {
                out.push(Violation::NonFinite { location: Location::Impulses });
            } else if *p <= 0.0 {
                out.push(Violation::PointNotPositive { index: i });
            }
        }
        if let Some(i) = self.points.windows(2).position(|w| !(w[1] > w[0])) {
            out.push(Violation::PointsNotIncreasing { index: i + 1 });
        }
        for found in [self.multipliers.len(), self.jumps.len()] {
            if found != self.points.len() {
                out.push(Violation::LengthMismatch {
                    location: Location::Impulses,
                    expected: self.points.len(),
                    found,
                });
            }
        }
        if !self.multipliers.iter().chain(&self.jumps).all(|v| v.is_finite()) {
            out.push(Violation::NonFinite { location: Location::Impulses });
        }
    }
}
