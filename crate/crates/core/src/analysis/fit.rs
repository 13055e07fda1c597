use crate::error::{Error, Result};
use crate::math;

/// Samples with `|value|` below this are left out of [`fit_decay`].
pub const FIT_FLOOR: f64 = 1e-12;

/// `|v(t)| ~ amplitude * exp(-rate * t)` by least squares on `ln |v|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub amplitude: f64,
    pub rate: f64,
    /// Number of samples above the floor.
    pub used: usize,
}

/// Fits a line through `(t, ln |v|)`. Needs at least ten samples, and two of
/// them above [`FIT_FLOOR`] at distinct times.
pub fn fit_decay(samples: &[(f64, f64)]) -> Result<DecayFit> {
    if samples.len() < 10 {
        return Err(Error::InsufficientSamples { found: samples.len(), needed: 10 });
    }
    let usable = || samples.iter().filter(|(t, v)| t.is_finite() && math::abs(*v) > FIT_FLOOR);
    let n = usable().count();
    if n < 2 {
        return Err(Error::InsufficientSamples { found: n, needed: 2 });
    }
    let nf = n as f64;
    let t_mean = usable().map(|s| s.0).sum::<f64>() / nf;
    let y_mean = usable().map(|s| math::ln(math::abs(s.1))).sum::<f64>() / nf;
    let (mut stt, mut sty) = (0.0, 0.0);
    for &(t, v) in usable() {
        let dt = t - t_mean;
        stt += dt * dt;
        sty += dt * (math::ln(math::abs(v)) - y_mean);
    }
    if stt == 0.0 {
        return Err(Error::arg("decay fit needs samples at distinct times"));
    }
    let slope = sty / stt;
    Ok(DecayFit { amplitude: math::exp(y_mean - slope * t_mean), rate: -slope, used: n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    fn sampled(f: impl Fn(f64) -> f64, n: usize, end: f64) -> Vec<(f64, f64)> {
        (0..=n).map(|i| end * i as f64 / n as f64).map(|t| (t, f(t))).collect()
    }

    #[test]
    fn pure_exponential() {
        let fit = fit_decay(&sampled(|t| (-t).exp(), 50, 10.0)).unwrap();
        assert!((fit.rate - 1.0).abs() < 1e-12);
        assert!((fit.amplitude - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_has_zero_rate() {
        let fit = fit_decay(&sampled(|_| 3.0, 20, 5.0)).unwrap();
        assert_eq!(fit.rate, 0.0);
        assert!((fit.amplitude - 3.0).abs() < 1e-14);
    }

    #[test]
    fn staircase_at_jump_points() {
        // 2^{-floor t} e^{-t} at integers is exactly exponential with rate 1 + ln 2
        let fit = fit_decay(&sampled(|t| 0.5f64.powf(t.floor()) * (-t).exp(), 10, 10.0)).unwrap();
        assert!((fit.rate - (1.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn floor_and_sample_count() {
        assert!(matches!(fit_decay(&sampled(|t| t, 5, 1.0)), Err(Error::InsufficientSamples { needed: 10, .. })));
        assert!(fit_decay(&sampled(|_| 0.0, 20, 1.0)).is_err());
        // zeros are skipped rather than poisoning the fit
        let mut s = sampled(|t| (-2.0 * t).exp(), 20, 4.0);
        s[3].1 = 0.0;
        assert!((fit_decay(&s).unwrap().rate - 2.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn recovers_any_exponential(a in 0.01f64..100.0, rate in -3.0f64..3.0) {
            let fit = fit_decay(&sampled(|t| -a * (-rate * t).exp(), 30, 3.0)).unwrap();
            prop_assert!((fit.rate - rate).abs() < 1e-9);
            prop_assert!((fit.amplitude / a - 1.0).abs() < 1e-9);
        }
    }
}
