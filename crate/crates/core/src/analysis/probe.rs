use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::fit::{fit_decay, DecayFit, FIT_FLOOR};
use crate::error::{Error, Result};
use crate::integrator::{solve, MeshOptions, PiecewiseSolution};
use crate::math;
use crate::model::{FunctionDescriptor, ValidatedSpec};

/// Forcing is piecewise constant on intervals of this length.
const FORCING_PIECE: f64 = 0.5;
/// Fraction of the horizon, counted from the end, that makes up the tail.
const TAIL: f64 = 0.2;
/// Number of windows whose maxima form the envelope fitted for decay.
const WINDOWS: usize = 20;

/// Family of random inputs `(r, alpha)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InputClass {
    /// `|alpha_j| <= amplitude`, `|r| <= amplitude`.
    Bounded { amplitude: f64 },
    /// `alpha_n = c_n / (n + 1)`, `r(t) = c(t) / (t + 1)` with `|c| <= amplitude`.
    Vanishing { amplitude: f64 },
    /// `|alpha_n| <= p exp(-lambda n)`, `|r(t)| <= p exp(-lambda t)`.
    Exponential { p: f64, lambda: f64 },
}

impl InputClass {
    fn check(&self) -> Result<()> {
        let ok = match *self {
            InputClass::Bounded { amplitude } | InputClass::Vanishing { amplitude } => amplitude >= 0.0,
            InputClass::Exponential { p, lambda } => p >= 0.0 && lambda > 0.0,
        };
        if !ok {
            return Err(Error::arg("input amplitudes must be nonnegative and lambda positive"));
        }
        Ok(())
    }

    /// Scale for the input attached to time `t` (for jumps, index `n`).
    fn weight(&self, at: f64) -> f64 {
        match *self {
            InputClass::Bounded { amplitude } => amplitude,
            InputClass::Vanishing { amplitude } => amplitude / (at + 1.0),
            InputClass::Exponential { p, lambda } => p * math::exp(-lambda * at),
        }
    }
}

/// What one randomized solve showed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialStats {
    pub sup_abs: f64,
    /// `sup |x|` over the last fifth of the horizon.
    pub tail_sup: f64,
    pub sup_forcing: f64,
    pub sup_jump: f64,
    /// Envelope fit `|x(t)| <= P0 exp(-lambda0 t)` for the exponential class;
    /// `amplitude` is raised so the bound holds at every node.
    pub fit: Option<DecayFit>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeResult {
    pub class: InputClass,
    pub seed: u64,
    pub horizon: f64,
    pub trials: Vec<TrialStats>,
    pub max_sup: f64,
    pub max_tail: f64,
    /// Bounded: every `sup |x|` finite. Vanishing: every tail at most half the
    /// trial's sup. Exponential: every fitted rate positive (or the solution
    /// vanished).
    pub verdict: bool,
}

fn trial_verdict(class: &InputClass, s: &TrialStats) -> bool {
    match class {
        InputClass::Bounded { .. } => s.sup_abs.is_finite(),
        InputClass::Vanishing { .. } => s.sup_abs == 0.0 || s.tail_sup <= 0.5 * s.sup_abs,
        InputClass::Exponential { .. } => {
            s.tail_sup < FIT_FLOOR || s.fit.is_some_and(|f| f.rate > 0.0)
        }
    }
}

/// Solves the equation `trials` times with random inputs of the given class,
/// keeping `x(0)` and the history from `spec`.
pub fn input_probe(
    spec: &ValidatedSpec,
    class: InputClass,
    trials: usize,
    horizon: f64,
    seed: u64,
    opts: &MeshOptions,
) -> Result<ProbeResult> {
    class.check()?;
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::arg("horizon must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pieces = math::ceil(horizon / FORCING_PIECE - 1e-9).max(1.0) as usize;
    let breakpoints: Vec<f64> = (1..pieces).map(|i| i as f64 * FORCING_PIECE).collect();

    let mut stats = Vec::with_capacity(trials);
    for _ in 0..trials {
        // the weight of each piece is taken at its right end, where it is smallest
        let values: Vec<f64> = (0..pieces)
            .map(|i| rng.random_range(-1.0..=1.0) * class.weight((i + 1) as f64 * FORCING_PIECE))
            .collect();
        let jumps: Vec<f64> = (1..=spec.impulses.len())
            .map(|n| rng.random_range(-1.0..=1.0) * class.weight(n as f64))
            .collect();
        let sup_forcing = values.iter().fold(0.0, |m: f64, v| m.max(math::abs(*v)));
        let sup_jump = jumps
            .iter()
            .zip(&spec.impulses.points)
            .filter(|(_, &p)| p <= horizon)
            .fold(0.0, |m: f64, (v, _)| m.max(math::abs(*v)));
        let forcing = FunctionDescriptor::PiecewiseConstant { breakpoints: breakpoints.clone(), values };
        let run = spec
            .with_inputs(spec.initial_value, forcing, spec.history.clone(), jumps)
            .map_err(Error::Validation)?;
        let x = solve(&run, horizon, opts)?;
        let mut s = summarize(&x, horizon);
        s.sup_forcing = sup_forcing;
        s.sup_jump = sup_jump;
        if matches!(class, InputClass::Exponential { .. }) {
            s.fit = envelope_fit(&x, horizon);
        }
        stats.push(s);
    }
    let max_sup = stats.iter().map(|s| s.sup_abs).fold(0.0, f64::max);
    let max_tail = stats.iter().map(|s| s.tail_sup).fold(0.0, f64::max);
    let verdict = stats.iter().all(|s| trial_verdict(&class, s));
    Ok(ProbeResult { class, seed, horizon, trials: stats, max_sup, max_tail, verdict })
}

/// `(t, |x|)` at every node, including limits from the left.
fn node_magnitudes(x: &PiecewiseSolution) -> impl Iterator<Item = (f64, f64)> + '_ {
    x.nodes()
        .iter()
        .zip(x.values().iter().zip(x.left_values()))
        .skip(1)
        .map(|(&t, (v, l))| (t, math::abs(*v).max(math::abs(*l))))
        .chain(core::iter::once((x.start(), math::abs(x.values()[0]))))
}

fn summarize(x: &PiecewiseSolution, horizon: f64) -> TrialStats {
    let tail_from = (1.0 - TAIL) * horizon;
    let mut sup_abs = 0.0_f64;
    let mut tail_sup = 0.0_f64;
    for (t, m) in node_magnitudes(x) {
        sup_abs = sup_abs.max(m);
        if t >= tail_from {
            tail_sup = tail_sup.max(m);
        }
    }
    TrialStats { sup_abs, tail_sup, sup_forcing: 0.0, sup_jump: 0.0, fit: None }
}

/// Fits the maxima of `|x|` over equal windows, then raises the amplitude so
/// that `|x(t)| <= P0 exp(-lambda0 t)` at every node.
fn envelope_fit(x: &PiecewiseSolution, horizon: f64) -> Option<DecayFit> {
    let width = horizon / WINDOWS as f64;
    let mut maxima = alloc::vec![0.0_f64; WINDOWS];
    for (t, m) in node_magnitudes(x) {
        let w = ((t / width) as usize).min(WINDOWS - 1);
        maxima[w] = maxima[w].max(m);
    }
    let samples: Vec<(f64, f64)> =
        maxima.iter().enumerate().map(|(i, &m)| (i as f64 * width, m)).collect();
    let mut fit = fit_decay(&samples).ok()?;
    fit.amplitude = node_magnitudes(x).map(|(t, m)| m * math::exp(fit.rate * t)).fold(0.0, f64::max);
    Some(fit)
}
