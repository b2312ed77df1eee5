//! Small signal helpers shared by the simulators and the metrics.

use std::f64::consts::PI;

use num_complex::Complex64;

/// Complex amplitude of harmonic `n` of one uniformly sampled period.
///
/// Returned with the sine convention: a record `A·sin(nθ + φ)` yields
/// `A·e^{jφ}`, matching how describing functions are defined.
pub fn sine_harmonic(period: &[f64], n: usize) -> Complex64 {
    let len = period.len() as f64;
    let acc = period
        .iter()
        .enumerate()
        .fold(Complex64::new(0.0, 0.0), |acc, (k, &y)| {
            acc + Complex64::from_polar(y, -2.0 * PI * n as f64 * k as f64 / len)
        });
    Complex64::new(0.0, 1.0) * acc * (2.0 / len)
}

pub fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

/// Relative RMS difference between two equal-length records.
pub fn relative_rms_diff(a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let scale = rms(b).max(f64::MIN_POSITIVE);
    rms(&diff) / scale
}
