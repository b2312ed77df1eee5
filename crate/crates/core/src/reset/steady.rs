use std::f64::consts::PI;

use num_complex::Complex64;

use super::{discretize_reset, ResetElement, ResetError};
use crate::signal::{relative_rms_diff, sine_harmonic};

/// Relative RMS period-to-period change accepted as periodic steady state.
pub const STEADY_TOLERANCE: f64 = 1e-6;
/// Hard cap on simulated periods before declaring non-convergence.
pub const MAX_PERIODS: usize = 200;
/// Minimum samples per period accepted by the steady-state simulator.
pub const MIN_SAMPLES_PER_PERIOD: usize = 200;

/// Final period of a sinusoidally driven reset element.
#[derive(Debug, Clone)]
pub struct SteadyRecord {
    pub omega: f64,
    pub amplitude: f64,
    /// Effective sample time; adjusted so one period is an integer number of samples.
    pub ts: f64,
    pub input: Vec<f64>,
    pub output: Vec<f64>,
    /// Sample indices within the final period at which a reset fired.
    pub reset_indices: Vec<usize>,
    pub periods_run: usize,
}

impl SteadyRecord {
    pub fn samples_per_period(&self) -> usize {
        self.output.len()
    }

    /// Harmonic `n` of the output per unit input amplitude.
    pub fn harmonic(&self, n: usize) -> Complex64 {
        sine_harmonic(&self.output, n) / self.amplitude
    }

    pub fn resets_per_period(&self) -> usize {
        self.reset_indices.len()
    }
}

/// Drives `el` with `amplitude·sin(ωt)` until the response is periodic and
/// returns the last period.
pub fn simulate_sinusoid_steady(
    el: &ResetElement,
    omega: f64,
    amplitude: f64,
    ts: f64,
    n_periods: usize,
) -> Result<SteadyRecord, ResetError> {
    if !(omega > 0.0 && amplitude > 0.0) {
        return Err(ResetError::Invalid("frequency and amplitude must be positive".into()));
    }
    let period = 2.0 * PI / omega;
    if !(ts > 0.0) || ts > period / MIN_SAMPLES_PER_PERIOD as f64 {
        return Err(ResetError::Invalid(format!(
            "sample time {ts} gives fewer than {MIN_SAMPLES_PER_PERIOD} samples per period"
        )));
    }
    if n_periods < 20 {
        return Err(ResetError::Invalid("at least 20 periods are required".into()));
    }
    let n = (period / ts).round() as usize;
    let ts = period / n as f64;
    let mut state = discretize_reset(el, ts)?;

    let input: Vec<f64> = (0..n)
        .map(|k| amplitude * (2.0 * PI * k as f64 / n as f64).sin())
        .collect();
    let mut prev = vec![0.0; n];
    let mut cur = vec![0.0; n];
    let mut resets = Vec::new();
    let mut last_diff = f64::INFINITY;
    let limit = n_periods.max(MAX_PERIODS);
    for p in 0..limit {
        resets.clear();
        for (k, &e) in input.iter().enumerate() {
            let step = state.step(e)?;
            cur[k] = step.u;
            if step.reset {
                resets.push(k);
            }
        }
        if p > 0 {
            last_diff = relative_rms_diff(&cur, &prev);
        }
        if p + 1 >= n_periods && last_diff < STEADY_TOLERANCE {
            return Ok(SteadyRecord {
                omega,
                amplitude,
                ts,
                input,
                output: cur,
                reset_indices: resets,
                periods_run: p + 1,
            });
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Err(ResetError::NonConvergent {
        periods: limit,
        residual: last_diff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reset::bls_tf;

    fn ts_for(omega: f64, samples: usize) -> f64 {
        2.0 * PI / omega / samples as f64
    }

    #[test]
    fn linear_element_reproduces_bls_response() {
        let el = ResetElement::proportional_gfore(1.0, 0.2, 1.0).unwrap();
        for &w in &[0.3, 1.0, 4.0] {
            let rec = simulate_sinusoid_steady(&el, w, 1.0, ts_for(w, 1000), 20).unwrap();
            let expected = bls_tf(&el).eval(w).unwrap();
            let got = rec.harmonic(1);
            assert!((got - expected).norm() / expected.norm() < 0.005, "w={w}");
            assert!(rec.reset_indices.len() == 2);
        }
    }

    #[test]
    fn clegg_first_harmonic_phase() {
        let rec = simulate_sinusoid_steady(&ResetElement::clegg(), 1.0, 1.0, ts_for(1.0, 2000), 20).unwrap();
        let phase = rec.harmonic(1).arg().to_degrees();
        assert!((phase + 38.15).abs() < 0.2, "phase {phase}");
    }

    #[test]
    fn output_has_half_wave_symmetry() {
        let el = ResetElement::gfore(2.0, 0.3).unwrap();
        let rec = simulate_sinusoid_steady(&el, 1.5, 1.0, ts_for(1.5, 1000), 20).unwrap();
        let n = rec.output.len();
        let half = n / 2;
        let scale = rec.output.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for k in 1..half {
            // Reset lands on the first sample after the crossing; allow one sample of skew.
            let sym = rec.output[k] + rec.output[k + half];
            assert!(sym.abs() < 0.02 * scale, "k={k} sym={sym}");
        }
        for even in [2, 4, 6] {
            assert!(rec.harmonic(even).norm() < 5e-3 * rec.harmonic(1).norm());
        }
    }

    #[test]
    fn full_reset_peak_can_exceed_bls() {
        let el = ResetElement::gfore(1.0, 0.0).unwrap();
        let peak_ratio = |w: f64| {
            let rec = simulate_sinusoid_steady(&el, w, 1.0, ts_for(w, 1000), 20).unwrap();
            let lin = bls_tf(&el).eval(w).unwrap().norm();
            rec.output.iter().fold(0.0f64, |m, v| m.max(v.abs())) / lin
        };
        // Slightly above the linear peak near the corner.
        assert!(peak_ratio(10f64.powf(-0.4)) > 1.0);
        // Far above the corner each half period integrates from zero like a
        // Clegg integrator, whose peak is 2/ω against the linear 1/ω.
        assert!((peak_ratio(50.0) - 2.0).abs() < 0.1, "{}", peak_ratio(50.0));
    }

    #[test]
    fn preconditions() {
        let el = ResetElement::gfore(1.0, 0.0).unwrap();
        assert!(simulate_sinusoid_steady(&el, 1.0, 1.0, 0.1, 20).is_err());
        assert!(simulate_sinusoid_steady(&el, 1.0, 1.0, 0.001, 5).is_err());
    }
}
