use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{linear_open_loop, AnalysisError, LoopConfig, Plant, LOOP_GUARD};
use crate::hosidf::{hosidf_series, open_loop_from_h};
use crate::lti::{LtiError, TfChain};

/// Phase samples per period used to locate the maximum of the steady-state error.
pub const PHASE_GRID: usize = 2048;

/// Closed-loop harmonics `S_1..S_{n_max}` at one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct PointHarmonics {
    pub omega: f64,
    /// `s[n-1]` is `S_n`.
    pub s: Vec<Complex64>,
    /// Some harmonic was dropped because the plant data did not cover `nω`.
    pub truncated: bool,
}

impl PointHarmonics {
    pub fn get(&self, n: usize) -> Complex64 {
        self.s.get(n - 1).copied().unwrap_or_default()
    }
}

fn guard(omega: f64, one_plus_l: Complex64) -> Result<Complex64, AnalysisError> {
    let m = one_plus_l.norm();
    if !(m >= LOOP_GUARD) {
        return Err(AnalysisError::NearSingular { omega, magnitude: m });
    }
    Ok(one_plus_l.inv())
}

/// `S_1 = 1/(1 + L_1)` and, for odd `n ≥ 3`,
/// `S_n = −L_n S_bl(jnω) |S_1| e^{jn∠S_1}`; even harmonics are zero.
pub fn harmonics_at(lp: &LoopConfig, omega: f64) -> Result<PointHarmonics, AnalysisError> {
    let n_max = lp.n_max.max(1);
    let h = hosidf_series(&lp.reset, omega, n_max)?;
    let l1 = open_loop_from_h(lp, omega, 1, h[1])?;
    if l1.truncated {
        let (min, max) = lp.plant.range();
        return Err(LtiError::OutOfRange { omega, min, max }.into());
    }
    let s1 = guard(omega, 1.0 + l1.value)?;
    let mut s = vec![Complex64::new(0.0, 0.0); n_max];
    s[0] = s1;
    let mut truncated = false;
    for n in (3..=n_max).step_by(2) {
        if h[n] == Complex64::new(0.0, 0.0) {
            continue;
        }
        let ln = open_loop_from_h(lp, omega, n, h[n])?;
        if ln.truncated {
            truncated = true;
            continue;
        }
        let nw = n as f64 * omega;
        let lbl = match lp.base_linear_open_loop(nw) {
            Ok(v) => v,
            Err(LtiError::OutOfRange { .. }) => {
                truncated = true;
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let sbl = guard(nw, 1.0 + lbl)?;
        let rot = Complex64::from_polar(s1.norm(), n as f64 * s1.arg());
        s[n - 1] = -ln.value * sbl * rot;
    }
    Ok(PointHarmonics { omega, s, truncated })
}

/// Single closed-loop harmonic `S_n(ω)`.
pub fn sensitivity_harmonic(lp: &LoopConfig, omega: f64, n: usize) -> Result<Complex64, AnalysisError> {
    if n == 0 || n.is_multiple_of(2) {
        return Ok(Complex64::new(0.0, 0.0));
    }
    if n > lp.n_max {
        let wider = lp.clone().with_n_max(n);
        return Ok(harmonics_at(&wider, omega)?.get(n));
    }
    Ok(harmonics_at(lp, omega)?.get(n))
}

/// Maximum of the reconstructed steady-state error over one period, per unit
/// reference amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PseudoSensitivity {
    /// `max_t e_ss(t)`
    pub signed_max: f64,
    /// `max_t |e_ss(t)|`
    pub abs_max: f64,
}

struct ErrorSeries<'a> {
    terms: Vec<(f64, &'a Complex64)>,
}

impl ErrorSeries<'_> {
    /// `e(θ)`, `e'(θ)`, `e''(θ)` for `e = Σ Im(S_n e^{jnθ})`.
    fn eval(&self, theta: f64) -> (f64, f64, f64) {
        let (mut f, mut d1, mut d2) = (0.0, 0.0, 0.0);
        for &(n, s) in &self.terms {
            let z = s * Complex64::from_polar(1.0, n * theta);
            f += z.im;
            d1 += n * z.re;
            d2 -= n * n * z.im;
        }
        (f, d1, d2)
    }

    /// Newton refinement of a local maximum of `sign·e` near `theta`.
    fn refine(&self, theta: f64, sign: f64, half_width: f64) -> f64 {
        let mut best = sign * self.eval(theta).0;
        let mut t = theta;
        for _ in 0..30 {
            let (_, d1, d2) = self.eval(t);
            let (d1, d2) = (sign * d1, sign * d2);
            if d2 >= 0.0 {
                break;
            }
            let next = (t - d1 / d2).clamp(theta - half_width, theta + half_width);
            let v = sign * self.eval(next).0;
            best = best.max(v);
            if (next - t).abs() < 1e-15 {
                break;
            }
            t = next;
        }
        best
    }
}

/// Pseudo-sensitivity from closed-loop harmonics `s[n-1] = S_n`.
///
/// The error is sampled on [`PHASE_GRID`] points per period and the best
/// sample is polished with a few Newton steps.
pub fn pseudo_sensitivity(s: &[Complex64]) -> PseudoSensitivity {
    let series = ErrorSeries {
        terms: s
            .iter()
            .enumerate()
            .filter(|(_, v)| v.norm() > 0.0)
            .map(|(i, v)| ((i + 1) as f64, v))
            .collect(),
    };
    if series.terms.is_empty() {
        return PseudoSensitivity {
            signed_max: 0.0,
            abs_max: 0.0,
        };
    }
    let step = 2.0 * PI / PHASE_GRID as f64;
    let mut samples = vec![0.0; PHASE_GRID];
    for &(n, sn) in &series.terms {
        let rot = Complex64::from_polar(1.0, n * step);
        let mut z = *sn;
        for v in samples.iter_mut() {
            *v += z.im;
            z *= rot;
        }
    }
    let (mut k_max, mut k_abs) = (0, 0);
    for k in 1..PHASE_GRID {
        if samples[k] > samples[k_max] {
            k_max = k;
        }
        if samples[k].abs() > samples[k_abs].abs() {
            k_abs = k;
        }
    }
    let signed_max = series.refine(k_max as f64 * step, 1.0, step);
    let sign = samples[k_abs].signum();
    let abs_max = series.refine(k_abs as f64 * step, sign, step);
    PseudoSensitivity { signed_max, abs_max }
}

/// `100·(|S_∞| − |S|)/|S|` per point; `None` where `|S| = 0`.
pub fn improvement_indicator(linear: &[f64], pseudo: &[f64]) -> Result<Vec<Option<f64>>, AnalysisError> {
    if linear.len() != pseudo.len() {
        return Err(AnalysisError::Invalid(format!(
            "curves differ in length ({} vs {})",
            linear.len(),
            pseudo.len()
        )));
    }
    Ok(linear
        .iter()
        .zip(pseudo)
        .map(|(&l, &p)| (l != 0.0).then(|| 100.0 * (p - l) / l))
        .collect())
}

/// Trapezoidal `∫ ln|S| dω` over the grid points inside `span` (whole grid if `None`).
pub fn bode_integral(omega: &[f64], curve: &[f64], span: Option<(f64, f64)>) -> Result<f64, AnalysisError> {
    if omega.len() != curve.len() {
        return Err(AnalysisError::Invalid("grid and curve lengths differ".into()));
    }
    let (lo, hi) = span.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    let pts: Vec<(f64, f64)> = omega
        .iter()
        .zip(curve)
        .filter(|(&w, _)| w >= lo && w <= hi)
        .map(|(&w, &c)| (w, c))
        .collect();
    if pts.len() < 2 {
        return Err(AnalysisError::Invalid(
            "integration span holds fewer than two grid points".into(),
        ));
    }
    if let Some(&(w, c)) = pts.iter().find(|(_, c)| !(*c > 0.0)) {
        return Err(AnalysisError::Domain { omega: w, value: c });
    }
    Ok(pts
        .windows(2)
        .map(|p| 0.5 * (p[1].0 - p[0].0) * (p[0].1.ln() + p[1].1.ln()))
        .sum())
}

/// Frequency of the first interior local extremum of `|G|` on the grid.
pub fn suggest_omega_res(plant: &Plant, grid: &[f64]) -> Option<f64> {
    let mags: Vec<f64> = grid
        .iter()
        .map(|&w| plant.response(w).map(|g| g.norm()).unwrap_or(f64::NAN))
        .collect();
    (1..mags.len().saturating_sub(1)).find_map(|i| {
        let (a, b, c) = (mags[i - 1], mags[i], mags[i + 1]);
        let extremum = (b > a && b > c) || (b < a && b < c);
        extremum.then_some(grid[i])
    })
}

/// Sensitivity curves of a reset loop against a linear reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityCurves {
    pub omega: Vec<f64>,
    pub n_max: usize,
    /// `|S|` of the linear reference controller.
    pub s_lin_mag: Vec<f64>,
    /// `harmonics[i][n-1]` is `S_n(omega[i])`.
    pub harmonics: Vec<Vec<Complex64>>,
    /// `|S_∞|` from the signed maximum.
    pub s_inf: Vec<f64>,
    /// Maximum of `|e_ss|`; equals `s_inf` for half-wave symmetric errors.
    pub s_inf_abs: Vec<f64>,
    pub delta_s_pct: Vec<Option<f64>>,
    pub truncated: Vec<bool>,
}

/// Evaluates all closed-loop quantities on `grid` in parallel.
///
/// `reference` is the linear controller whose sensitivity `1/(1 + C·G)` is the
/// comparison baseline; `None` uses the loop's own base linear system.
pub fn sensitivity_curves(
    lp: &LoopConfig,
    reference: Option<&TfChain>,
    grid: &[f64],
) -> Result<SensitivityCurves, AnalysisError> {
    let rows: Vec<(f64, PointHarmonics, PseudoSensitivity)> = grid
        .par_iter()
        .map(|&w| {
            let l_lin = match reference {
                Some(c) => linear_open_loop(lp, c, w)?,
                None => lp.base_linear_open_loop(w)?,
            };
            let s_lin = guard(w, 1.0 + l_lin)?.norm();
            let h = harmonics_at(lp, w)?;
            let ps = pseudo_sensitivity(&h.s);
            Ok((s_lin, h, ps))
        })
        .collect::<Result<_, AnalysisError>>()?;
    let s_lin_mag: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let s_inf: Vec<f64> = rows.iter().map(|r| r.2.signed_max).collect();
    let delta_s_pct = improvement_indicator(&s_lin_mag, &s_inf)?;
    Ok(SensitivityCurves {
        omega: grid.to_vec(),
        n_max: lp.n_max,
        s_inf_abs: rows.iter().map(|r| r.2.abs_max).collect(),
        truncated: rows.iter().map(|r| r.1.truncated).collect(),
        harmonics: rows.into_iter().map(|r| r.1.s).collect(),
        s_lin_mag,
        s_inf,
        delta_s_pct,
    })
}

impl SensitivityCurves {
    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    /// CSV: `omega,S_lin_mag,S1_re,S1_im,S3_re,S3_im,...,S_inf,delta_s_pct,truncated`.
    /// Only odd harmonics are written; undefined `δ_s` is an empty field.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("omega,S_lin_mag");
        for n in (1..=self.n_max).step_by(2) {
            let _ = write!(out, ",S{n}_re,S{n}_im");
        }
        out.push_str(",S_inf,delta_s_pct,truncated\n");
        for i in 0..self.omega.len() {
            let _ = write!(out, "{},{}", self.omega[i], self.s_lin_mag[i]);
            for n in (1..=self.n_max).step_by(2) {
                let v = self.harmonics[i][n - 1];
                let _ = write!(out, ",{},{}", v.re, v.im);
            }
            let delta = self.delta_s_pct[i].map(|d| d.to_string()).unwrap_or_default();
            let _ = writeln!(out, ",{},{},{}", self.s_inf[i], delta, u8::from(self.truncated[i]));
        }
        out
    }
}
