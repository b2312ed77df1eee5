use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{SimError, StationaryRegion};
use crate::signal::rms;

/// Minimum record length accepted by the PSD estimator.
pub const PSD_MIN_SAMPLES: usize = 256;
/// Default upper bound on the Welch segment length.
pub const PSD_SEGMENT_CAP: usize = 1024;

/// Settling and error statistics over one stationary region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    /// `T* = t_s − t_r`, seconds.
    pub t_star: f64,
    pub t_s: f64,
    /// False when the error was still outside the band at `t_e`.
    pub settled: bool,
    /// RMS error over `[t_r, t_e]`.
    pub rms: f64,
    pub resets: usize,
}

fn region_indices(len: usize, ts: f64, region: &StationaryRegion) -> Result<(usize, usize), SimError> {
    let k_r = (region.t_r / ts).round() as usize;
    let k_e = ((region.t_e / ts).round() as usize).min(len.saturating_sub(1));
    if len == 0 || k_r > k_e {
        return Err(SimError::Invalid(format!(
            "trace of {len} samples does not cover [{}, {}]",
            region.t_r, region.t_e
        )));
    }
    Ok((k_r, k_e))
}

/// `t_s` is the first instant after which `|e| ≤ B_x` holds for the rest of
/// the region; it is the sample following the last band exceedance.
pub fn settling_metrics(
    error: &[f64],
    reset_flag: &[bool],
    ts: f64,
    region: &StationaryRegion,
    band: f64,
) -> Result<RunMetrics, SimError> {
    let (k_r, k_e) = region_indices(error.len(), ts, region)?;
    let window = &error[k_r..=k_e];
    let last_out = window.iter().rposition(|v| v.abs() > band);
    let (t_s, settled) = match last_out {
        None => (region.t_r, true),
        Some(i) if k_r + i == k_e => (region.t_e, false),
        Some(i) => ((k_r + i + 1) as f64 * ts, true),
    };
    let resets = reset_flag
        .get(k_r..=k_e)
        .map(|f| f.iter().filter(|&&x| x).count())
        .unwrap_or(0);
    Ok(RunMetrics {
        t_star: t_s - region.t_r,
        t_s,
        settled,
        rms: rms(window),
        resets,
    })
}

/// One-sided power spectral density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Psd {
    /// rad/s
    pub omega: Vec<f64>,
    /// Power per rad/s; integrates over `omega` to the signal variance.
    pub density: Vec<f64>,
    pub segment_len: usize,
}

impl Psd {
    /// Density at the bin nearest `omega`.
    pub fn at(&self, omega: f64) -> f64 {
        let i = self
            .omega
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - omega).abs().total_cmp(&(b.1 - omega).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        self.density[i]
    }

    /// Largest density within `[lo, hi]`.
    pub fn peak_in(&self, lo: f64, hi: f64) -> Option<(f64, f64)> {
        self.omega
            .iter()
            .zip(&self.density)
            .filter(|(w, _)| **w >= lo && **w <= hi)
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(w, d)| (*w, *d))
    }

    pub fn variance(&self) -> f64 {
        let dw = self.omega.get(1).copied().unwrap_or(0.0);
        self.density.iter().sum::<f64>() * dw
    }
}

/// Welch estimate with a Hann window, 50 % overlap and per-segment mean
/// removal. The segment length is `min(cap, N/4)` with `cap` defaulting to
/// [`PSD_SEGMENT_CAP`].
pub fn error_psd(x: &[f64], fs: f64, segment_cap: Option<usize>) -> Result<Psd, SimError> {
    if x.len() < PSD_MIN_SAMPLES {
        return Err(SimError::InsufficientData {
            needed: PSD_MIN_SAMPLES,
            got: x.len(),
        });
    }
    if !(fs > 0.0) {
        return Err(SimError::Invalid(format!("sample rate must be positive, got {fs}")));
    }
    let nseg = segment_cap.unwrap_or(PSD_SEGMENT_CAP).min(x.len() / 4).max(8);
    let hop = nseg / 2;
    let window: Vec<f64> = (0..nseg)
        .map(|k| 0.5 - 0.5 * (2.0 * PI * k as f64 / nseg as f64).cos())
        .collect();
    let u: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(nseg);
    let n_bins = nseg / 2 + 1;
    let mut acc = vec![0.0; n_bins];
    let mut count = 0usize;
    let mut buf = vec![Complex::new(0.0, 0.0); nseg];
    let mut start = 0;
    while start + nseg <= x.len() {
        let seg = &x[start..start + nseg];
        let mean = seg.iter().sum::<f64>() / nseg as f64;
        for (b, (&v, &w)) in buf.iter_mut().zip(seg.iter().zip(&window)) {
            *b = Complex::new((v - mean) * w, 0.0);
        }
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
        count += 1;
        start += hop;
    }
    // Per-Hz scaling, folded to one side, then converted to per rad/s.
    let scale = 1.0 / (fs * u * count as f64) / (2.0 * PI);
    let density: Vec<f64> = acc
        .iter()
        .enumerate()
        .map(|(k, &a)| {
            let fold = if k == 0 || (nseg.is_multiple_of(2) && k == nseg / 2) {
                1.0
            } else {
                2.0
            };
            a * scale * fold
        })
        .collect();
    let omega = (0..n_bins).map(|k| 2.0 * PI * k as f64 * fs / nseg as f64).collect();
    Ok(Psd {
        omega,
        density,
        segment_len: nseg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::noise_sequence;

    fn region(t_r: f64, t_e: f64) -> StationaryRegion {
        StationaryRegion {
            t_r,
            t_e,
            level: 0.0,
            direction: 1.0,
        }
    }

    #[test]
    fn inside_band_settles_immediately() {
        let e = vec![1e-4; 1000];
        let m = settling_metrics(&e, &[], 1e-3, &region(0.2, 0.8), 1e-3).unwrap();
        assert_eq!(m.t_star, 0.0);
        assert!(m.settled);
        assert!((m.rms - 1e-4).abs() < 1e-15);
    }

    #[test]
    fn decaying_oscillation_last_crossing() {
        // e = e^{−t} cos(2πt) from t_r = 0; the envelope falls below 0.05 at
        // t = ln 20 ≈ 2.996, and the last exceedance is the last cosine peak
        // above the band before that.
        let ts = 1e-4;
        let e: Vec<f64> = (0..60_000)
            .map(|k| {
                let t = k as f64 * ts;
                (-t).exp() * (2.0 * PI * t).cos()
            })
            .collect();
        let band = 0.05;
        let m = settling_metrics(&e, &[], ts, &region(0.0, 5.9), band).unwrap();
        // Independent scan in continuous time on a finer grid.
        let mut last = 0.0;
        let mut t: f64 = 0.0;
        while t < 5.9 {
            if ((-t).exp() * (2.0 * PI * t).cos()).abs() > band {
                last = t;
            }
            t += 1e-6;
        }
        assert!((m.t_star - last).abs() < 2.0 * ts, "{} vs {last}", m.t_star);
        assert!(m.settled);
    }

    #[test]
    fn never_settling_is_flagged() {
        let e = vec![1.0; 1000];
        let m = settling_metrics(&e, &[], 1e-3, &region(0.1, 0.9), 0.5).unwrap();
        assert!(!m.settled);
        assert!((m.t_star - 0.8).abs() < 1e-12);
    }

    #[test]
    fn sinusoid_peak_lands_on_nearest_bin() {
        let fs = 1000.0;
        let w0 = 2.0 * PI * 62.5;
        let x: Vec<f64> = (0..8192).map(|k| (w0 * k as f64 / fs).sin()).collect();
        let psd = error_psd(&x, fs, None).unwrap();
        let (wp, _) = psd.peak_in(0.0, f64::INFINITY).unwrap();
        let dw = psd.omega[1];
        assert!((wp - w0).abs() <= 0.5 * dw + 1e-9);
        assert!((psd.variance() - 0.5).abs() < 0.01);
    }

    #[test]
    fn white_noise_is_flat() {
        let fs = 100.0;
        let sigma = 0.3;
        let x = noise_sequence(200_000, sigma, 11).unwrap();
        let psd = error_psd(&x, fs, Some(256)).unwrap();
        let expected = sigma * sigma / (PI * fs);
        // About 1560 averaged segments: relative spread per bin is ~2.5 %.
        // Per-segment mean removal also takes power out of bin 1 through the
        // Hann main lobe, so the flat region starts at bin 2.
        assert!(psd.density[1] < expected);
        for &d in &psd.density[2..psd.density.len() - 1] {
            assert!((d / expected - 1.0).abs() < 0.15, "{d} vs {expected}");
        }
        assert!((psd.variance() / (sigma * sigma) - 1.0).abs() < 0.02);
    }

    #[test]
    fn short_records_are_rejected() {
        assert!(matches!(
            error_psd(&[0.0; 100], 1.0, None),
            Err(SimError::InsufficientData { .. })
        ));
    }
}
