use alloc::vec::Vec;

use super::validation::{Location, Violation};
use crate::math;

/// A real function of time: a coefficient `A_i`, the forcing `r` or the
/// history `phi`.
///
/// Piecewise-constant functions are right-continuous: `values[0]` applies
/// below `breakpoints[0]`, `values[i]` on `[breakpoints[i-1], breakpoints[i])`
/// and the last value from the last breakpoint on. Tabulated functions are
/// linearly interpolated and held constant outside the table.
#[derive(Debug, Clone, PartialEq)]
pub enum FunctionDescriptor {
    Constant(f64),
    PiecewiseConstant { breakpoints: Vec<f64>, values: Vec<f64> },
    Tabulated { abscissae: Vec<f64>, values: Vec<f64> },
}

/// What to integrate over a linear piece.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrand {
    Signed,
    Abs,
    PositivePart,
}

impl Default for FunctionDescriptor {
    fn default() -> Self {
        FunctionDescriptor::Constant(0.0)
    }
}

impl FunctionDescriptor {
    pub fn zero() -> Self {
        Self::Constant(0.0)
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::Constant(c) => *c == 0.0,
            Self::PiecewiseConstant { values, .. } | Self::Tabulated { values, .. } => {
                values.iter().all(|v| *v == 0.0)
            }
        }
    }

    /// Right-continuous value at `t`.
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Self::Constant(c) => *c,
            Self::PiecewiseConstant { breakpoints, values } => {
                values[breakpoints.partition_point(|&b| b <= t)]
            }
            Self::Tabulated { abscissae, values } => lerp_table(abscissae, values, t),
        }
    }

    /// Limit from the left at `t`.
    pub fn eval_left(&self, t: f64) -> f64 {
        match self {
            Self::PiecewiseConstant { breakpoints, values } => {
                values[breakpoints.partition_point(|&b| b < t)]
            }
            _ => self.eval(t),
        }
    }

    /// Points where the function or its derivative may be discontinuous.
    pub fn kinks(&self) -> &[f64] {
        match self {
            Self::Constant(_) => &[],
            Self::PiecewiseConstant { breakpoints, .. } => breakpoints,
            Self::Tabulated { abscissae, .. } => abscissae,
        }
    }

    /// Splits `[a, b]` into pieces on which the function is linear, returning
    /// `(x0, x1, f(x0+), f(x1-))` for each.
    pub fn linear_pieces(&self, a: f64, b: f64) -> Vec<(f64, f64, f64, f64)> {
        let mut cuts = Vec::with_capacity(2);
        cuts.push(a);
        cuts.extend(self.kinks().iter().copied().filter(|&k| k > a && k < b));
        cuts.push(b);
        cuts.windows(2)
            .map(|w| (w[0], w[1], self.eval(w[0]), self.eval_left(w[1])))
            .collect()
    }

    /// Exact integral over `[a, b]` of the function, its absolute value or its
    /// positive part.
    pub fn integral(&self, a: f64, b: f64, integrand: Integrand) -> f64 {
        if b <= a {
            return 0.0;
        }
        self.linear_pieces(a, b)
            .into_iter()
            .map(|(x0, x1, y0, y1)| linear_integral(x1 - x0, y0, y1, integrand))
            .sum()
    }

    /// Supremum of `|f|` over `[a, b]`.
    pub fn sup_abs_on(&self, a: f64, b: f64) -> f64 {
        self.linear_pieces(a, b)
            .into_iter()
            .map(|(_, _, y0, y1)| math::abs(y0).max(math::abs(y1)))
            .fold(0.0, f64::max)
    }

    /// Infimum of `f` over `[a, b]`.
    pub fn inf_on(&self, a: f64, b: f64) -> f64 {
        self.linear_pieces(a, b)
            .into_iter()
            .map(|(_, _, y0, y1)| y0.min(y1))
            .fold(f64::INFINITY, f64::min)
    }

    pub(crate) fn check(&self, location: Location, out: &mut Vec<Violation>) {
        match self {
            Self::Constant(c) => {
                if !c.is_finite() {
                    out.push(Violation::NonFinite { location });
                }
            }
            Self::PiecewiseConstant { breakpoints, values } => {
                if values.len() != breakpoints.len() + 1 {
                    out.push(Violation::LengthMismatch {
                        location,
                        expected: breakpoints.len() + 1,
                        found: values.len(),
                    });
                }
                check_abscissae(breakpoints, location, out);
                if !values.iter().all(|v| v.is_finite()) {
                    out.push(Violation::NonFinite { location });
                }
            }
            Self::Tabulated { abscissae, values } => {
                if abscissae.is_empty() {
                    out.push(Violation::Empty { location });
                }
                if values.len() != abscissae.len() {
                    out.push(Violation::LengthMismatch {
                        location,
                        expected: abscissae.len(),
                        found: values.len(),
                    });
                }
                check_abscissae(abscissae, location, out);
                if !values.iter().all(|v| v.is_finite()) {
                    out.push(Violation::NonFinite { location });
                }
            }
        }
    }
}

/// The deviating argument `h(t) <= t` of a delay term.
///
/// Tabulated deviations are piecewise linear and extended past both ends of
/// the table along the end segments; a single-sample table is a constant lag.
#[derive(Debug, Clone, PartialEq)]
pub enum DeviationDescriptor {
    /// `h(t) = t - lag`.
    ConstantLag(f64),
    Tabulated { abscissae: Vec<f64>, values: Vec<f64> },
}

impl DeviationDescriptor {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Self::ConstantLag(d) => t - d,
            Self::Tabulated { abscissae, values } => {
                let n = abscissae.len();
                if n == 1 {
                    return t - (abscissae[0] - values[0]);
                }
                let i = abscissae.partition_point(|&a| a <= t).clamp(1, n - 1);
                let (a0, a1) = (abscissae[i - 1], abscissae[i]);
                let (v0, v1) = (values[i - 1], values[i]);
                v0 + (v1 - v0) * (t - a0) / (a1 - a0)
            }
        }
    }

    /// Whether `h(t) = t` identically, i.e. the term is not delayed at all.
    pub fn is_zero_lag(&self) -> bool {
        match self {
            Self::ConstantLag(d) => *d == 0.0,
            Self::Tabulated { abscissae, values } => abscissae == values,
        }
    }

    /// Whether `t - h(t)` stays bounded as `t` grows.
    pub fn is_lag_bounded(&self) -> bool {
        match self {
            Self::ConstantLag(_) => true,
            Self::Tabulated { abscissae, values } => {
                let n = abscissae.len();
                n == 1 || {
                    let slope =
                        (values[n - 1] - values[n - 2]) / (abscissae[n - 1] - abscissae[n - 2]);
                    math::abs(slope - 1.0) <= 1e-12
                }
            }
        }
    }

    /// Largest lag `t - h(t)` over `[a, b]`.
    pub fn max_lag_on(&self, a: f64, b: f64) -> f64 {
        match self {
            Self::ConstantLag(d) => *d,
            Self::Tabulated { abscissae, .. } => abscissae
                .iter()
                .copied()
                .filter(|&x| x > a && x < b)
                .chain([a, b])
                .map(|x| x - self.eval(x))
                .fold(0.0, f64::max),
        }
    }

    /// Smallest `xi >= 0` with `h(xi) = b`, if it lies strictly after `b`.
    ///
    /// This is where a discontinuity of the solution at `b` reappears in the
    /// delayed term.
    pub fn preimage(&self, b: f64) -> Option<f64> {
        let xi = match self {
            Self::ConstantLag(d) => b + d,
            Self::Tabulated { abscissae, .. } => {
                if self.eval(0.0) >= b {
                    0.0
                } else {
                    let mut knots: Vec<f64> = Vec::with_capacity(abscissae.len() + 1);
                    knots.push(0.0);
                    knots.extend(abscissae.iter().copied().filter(|&a| a > 0.0));
                    let mut found = None;
                    for w in knots.windows(2) {
                        let (p, q) = (w[0], w[1]);
                        let (hp, hq) = (self.eval(p), self.eval(q));
                        if hq >= b {
                            found = Some(p + (b - hp) / (hq - hp) * (q - p));
                            break;
                        }
                    }
                    match found {
                        Some(xi) => xi,
                        None => {
                            let last = *knots.last().unwrap();
                            let slope = self.eval(last + 1.0) - self.eval(last);
                            if slope <= 0.0 {
                                return None;
                            }
                            last + (b - self.eval(last)) / slope
                        }
                    }
                }
            }
        };
        (xi > b).then_some(xi)
    }

    pub(crate) fn check(&self, term: usize, out: &mut Vec<Violation>) {
        let location = Location::Delay(term);
        match self {
            Self::ConstantLag(d) => {
                if !d.is_finite() {
                    out.push(Violation::NonFinite { location });
                } else if *d < 0.0 {
                    out.push(Violation::NegativeLag { term });
                }
            }
            Self::Tabulated { abscissae, values } => {
                if abscissae.is_empty() {
                    out.push(Violation::Empty { location });
                    return;
                }
                if values.len() != abscissae.len() {
                    out.push(Violation::LengthMismatch {
                        location,
                        expected: abscissae.len(),
                        found: values.len(),
                    });
                    return;
                }
                if !abscissae.iter().chain(values).all(|v| v.is_finite()) {
                    out.push(Violation::NonFinite { location });
                    return;
                }
                check_abscissae(abscissae, location, out);
                if abscissae[0] > 0.0 {
                    out.push(Violation::DeviationStartsLate { term });
                }
                if let Some((&t, &h)) = abscissae.iter().zip(values).find(|(t, h)| h > t) {
                    out.push(Violation::DelayExceedsTime { term, t, h });
                }
                if values.windows(2).any(|w| w[1] < w[0]) {
                    out.push(Violation::NonMonotoneDeviation { term });
                }
                let n = abscissae.len();
                if n >= 2 {
                    let slope =
                        (values[n - 1] - values[n - 2]) / (abscissae[n - 1] - abscissae[n - 2]);
                    if slope > 1.0 + 1e-12 {
                        out.push(Violation::DeviationOvertakes { term });
                    }
                }
            }
        }
    }
}

fn check_abscissae(xs: &[f64], location: Location, out: &mut Vec<Violation>) {
    if xs.windows(2).any(|w| !(w[1] > w[0])) {
        out.push(Violation::NotIncreasing { location });
    }
    if !xs.iter().all(|v| v.is_finite()) {
        out.push(Violation::NonFinite { location });
    }
}

fn lerp_table(xs: &[f64], ys: &[f64], t: f64) -> f64 {
    let n = xs.len();
    if t <= xs[0] {
        return ys[0];
    }
    if t >= xs[n - 1] {
        return ys[n - 1];
    }
    let i = xs.partition_point(|&a| a <= t);
    let (x0, x1) = (xs[i - 1], xs[i]);
    ys[i - 1] + (ys[i] - ys[i - 1]) * (t - x0) / (x1 - x0)
}

fn linear_integral(width: f64, y0: f64, y1: f64, integrand: Integrand) -> f64 {
    match integrand {
        Integrand::Signed => 0.5 * width * (y0 + y1),
        Integrand::Abs => {
            if y0 * y1 >= 0.0 {
                0.5 * width * (math::abs(y0) + math::abs(y1))
            } else {
                let f = y0 / (y0 - y1);
                0.5 * width * (f * math::abs(y0) + (1.0 - f) * math::abs(y1))
            }
        }
        Integrand::PositivePart => {
            if y0 >= 0.0 && y1 >= 0.0 {
                0.5 * width * (y0 + y1)
            } else if y0 <= 0.0 && y1 <= 0.0 {
                0.0
            } else {
                let f = y0 / (y0 - y1);
                if y0 > 0.0 {
                    0.5 * width * f * y0
                } else {
                    0.5 * width * (1.0 - f) * y1
                }
            }
        }
    }
}
