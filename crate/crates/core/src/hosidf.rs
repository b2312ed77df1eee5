//! Higher-order sinusoidal-input describing functions (HOSIDFs) of reset
//! elements, open-loop harmonics of a reset loop, and the CgLp describing
//! functions built from them.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cglp::CglpDesign;
use crate::closed_loop::LoopConfig;
use crate::lti::LtiError;
use crate::reset::ResetElement;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum HosidfError {
    #[error("{what} is singular at omega = {omega}")]
    Singular { what: &'static str, omega: f64 },
    #[error("frequency must be positive, got {0}")]
    BadFrequency(f64),
    #[error(transparent)]
    Lti(#[from] LtiError),
}

/// Matrix intermediates of the describing-function formula at one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct ResetIntermediates {
    pub omega: f64,
    /// `ω²I + A_r²`
    pub lambda: DMatrix<f64>,
    /// `I + e^{(π/ω)A_r}`
    pub delta: DMatrix<f64>,
    /// `I + A_ρ e^{(π/ω)A_r}`
    pub delta_r: DMatrix<f64>,
    /// `Δ_r⁻¹ A_ρ Δ Λ⁻¹`
    pub gamma_r: DMatrix<f64>,
    /// `−(2ω²/π) Δ (Γ_r − Λ⁻¹)`
    pub theta_d: DMatrix<f64>,
}

fn expm_scaled(a: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    if a.nrows() == 1 {
        DMatrix::from_element(1, 1, (a[(0, 0)] * t).exp())
    } else {
        (a * t).exp()
    }
}

pub fn reset_intermediates(el: &ResetElement, omega: f64) -> Result<ResetIntermediates, HosidfError> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(HosidfError::BadFrequency(omega));
    }
    let n = el.order();
    let eye = DMatrix::<f64>::identity(n, n);
    let a = el.a_r();
    let lambda = &eye * (omega * omega) + a * a;
    let e = expm_scaled(a, PI / omega);
    let delta = &eye + &e;
    let a_rho = el.a_rho_matrix();
    let delta_r = &eye + &a_rho * &e;
    let lambda_inv = lambda
        .clone()
        .try_inverse()
        .ok_or(HosidfError::Singular { what: "Lambda", omega })?;
    let delta_r_inv = delta_r
        .clone()
        .try_inverse()
        .ok_or(HosidfError::Singular { what: "Delta_r", omega })?;
    let gamma_r = &delta_r_inv * &a_rho * &delta * &lambda_inv;
    // With A_rho = I the bracket vanishes analytically; keep it exactly zero.
    let theta_d = if el.is_linear() {
        DMatrix::zeros(n, n)
    } else {
        &delta * (&gamma_r - &lambda_inv) * (-2.0 * omega * omega / PI)
    };
    Ok(ResetIntermediates {
        omega,
        lambda,
        delta,
        delta_r,
        gamma_r,
        theta_d,
    })
}

fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|x| Complex64::new(x, 0.0))
}

/// `C_r (jnωI − A_r)⁻¹ v`
fn resolvent_apply(el: &ResetElement, omega: f64, n: usize, v: DVector<Complex64>) -> Result<Complex64, HosidfError> {
    let dim = el.order();
    let m = DMatrix::<Complex64>::identity(dim, dim) * Complex64::new(0.0, n as f64 * omega) - to_complex(el.a_r());
    let x = m.lu().solve(&v).ok_or(HosidfError::Singular {
        what: "jnωI - A_r",
        omega,
    })?;
    let c = el.c_r().map(|x| Complex64::new(x, 0.0));
    Ok((c * x)[(0, 0)])
}

fn harmonic_from(el: &ResetElement, im: &ResetIntermediates, n: usize) -> Result<Complex64, HosidfError> {
    if n == 0 || n.is_multiple_of(2) {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let j = Complex64::new(0.0, 1.0);
    let theta_b = to_complex(&im.theta_d) * el.b_r().map(|x| Complex64::new(x, 0.0)) * j;
    if n == 1 {
        let v = el.b_r().map(|x| Complex64::new(x, 0.0)) + theta_b;
        Ok(resolvent_apply(el, im.omega, 1, v)? + el.d_r())
    } else {
        resolvent_apply(el, im.omega, n, theta_b)
    }
}

/// HOSIDF `H_n(ω)` of a reset element; exactly zero for even `n`.
pub fn hosidf_reset(el: &ResetElement, omega: f64, n: usize) -> Result<Complex64, HosidfError> {
    if n.is_multiple_of(2) {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let im = reset_intermediates(el, omega)?;
    harmonic_from(el, &im, n)
}

/// `H_1..=H_{n_max}` at one frequency; index 0 is unused and zero.
pub fn hosidf_series(el: &ResetElement, omega: f64, n_max: usize) -> Result<Vec<Complex64>, HosidfError> {
    let im = reset_intermediates(el, omega)?;
    (0..=n_max).map(|n| harmonic_from(el, &im, n)).collect()
}

/// Open-loop harmonic with a truncation marker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicValue {
    pub value: Complex64,
    pub truncated: bool,
}

/// `L_n(ω) = G(njω) C_2(njω) H_n(ω) C_1(jω) e^{j(n−1)∠C_1(jω)}`.
///
/// When the plant FRF does not cover `nω` the entry is returned as zero with
/// its truncation flag set.
pub fn open_loop_harmonic(lp: &LoopConfig, omega: f64, n: usize) -> Result<HarmonicValue, HosidfError> {
    let h = hosidf_reset(&lp.reset, omega, n)?;
    open_loop_from_h(lp, omega, n, h)
}

pub(crate) fn open_loop_from_h(
    lp: &LoopConfig,
    omega: f64,
    n: usize,
    h: Complex64,
) -> Result<HarmonicValue, HosidfError> {
    let zero = Complex64::new(0.0, 0.0);
    if n.is_multiple_of(2) {
        return Ok(HarmonicValue {
            value: zero,
            truncated: false,
        });
    }
    let nw = n as f64 * omega;
    let g = match lp.plant_response(nw) {
        Ok(g) => g,
        Err(LtiError::OutOfRange { .. }) => {
            return Ok(HarmonicValue {
                value: zero,
                truncated: true,
            })
        }
        Err(e) => return Err(e.into()),
    };
    let c2 = lp.c2_response(nw)?;
    let c1 = lp.c1_response(omega)?;
    let rot = Complex64::from_polar(1.0, (n as f64 - 1.0) * c1.arg());
    Ok(HarmonicValue {
        value: g * c2 * h * c1 * rot,
        truncated: false,
    })
}

/// CgLp describing function `𝔠_n(ω) = k_c C_𝔠(njω) H_n(ω)`.
pub fn cglp_hosidf(design: &CglpDesign, omega: f64, n: usize) -> Result<Complex64, HosidfError> {
    if n.is_multiple_of(2) {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let h = hosidf_reset(&design.reset_element(), omega, n)?;
    let lead = design.lead_tf().eval(n as f64 * omega)?;
    Ok(design.k_c * lead * h)
}

/// `100·|𝔠_3|/|𝔠_1|` on a grid.
pub fn harmonic_ratio(design: &CglpDesign, grid: &[f64]) -> Result<Vec<f64>, HosidfError> {
    grid.iter()
        .map(|&w| {
            let c1 = cglp_hosidf(design, w, 1)?;
            let c3 = cglp_hosidf(design, w, 3)?;
            Ok(100.0 * c3.norm() / c1.norm())
        })
        .collect()
}

/// Harmonic values on a frequency grid for `n = 1..=n_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicResponse {
    pub omega: Vec<f64>,
    pub n_max: usize,
    /// `values[i][n-1]` is harmonic `n` at `omega[i]`.
    pub values: Vec<Vec<Complex64>>,
    pub truncated: Vec<Vec<bool>>,
}

impl HarmonicResponse {
    pub fn get(&self, i: usize, n: usize) -> Complex64 {
        self.values[i][n - 1]
    }

    /// Reset-element HOSIDFs on a grid.
    pub fn of_reset(el: &ResetElement, grid: &[f64], n_max: usize) -> Result<Self, HosidfError> {
        let values = grid
            .iter()
            .map(|&w| hosidf_series(el, w, n_max).map(|v| v[1..].to_vec()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            omega: grid.to_vec(),
            n_max,
            truncated: vec![vec![false; n_max]; grid.len()],
            values,
        })
    }

    /// Open-loop harmonics `L_n` of a loop on a grid.
    pub fn of_open_loop(lp: &LoopConfig, grid: &[f64]) -> Result<Self, HosidfError> {
        let n_max = lp.n_max;
        let mut values = Vec::with_capacity(grid.len());
        let mut truncated = Vec::with_capacity(grid.len());
        for &w in grid {
            let h = hosidf_series(&lp.reset, w, n_max)?;
            let mut row = Vec::with_capacity(n_max);
            let mut flags = Vec::with_capacity(n_max);
            for (n, &hn) in h.iter().enumerate().take(n_max + 1).skip(1) {
                let hv = open_loop_from_h(lp, w, n, hn)?;
                row.push(hv.value);
                flags.push(hv.truncated);
            }
            values.push(row);
            truncated.push(flags);
        }
        Ok(Self {
            omega: grid.to_vec(),
            n_max,
            values,
            truncated,
        })
    }

    /// CSV with columns `omega,n,re,im,truncated`.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("omega,n,re,im,truncated\n");
        for (i, w) in self.omega.iter().enumerate() {
            for n in 1..=self.n_max {
                let v = self.values[i][n - 1];
                let _ = writeln!(out, "{w},{n},{},{},{}", v.re, v.im, u8::from(self.truncated[i][n - 1]));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reset::bls_tf;

    #[test]
    fn identity_reset_collapses_to_bls() {
        let el = ResetElement::proportional_gfore(3.0, 0.4, 1.0).unwrap();
        let tf = bls_tf(&el);
        for k in 0..30 {
            let w = 10f64.powf(-2.0 + k as f64 * 0.15);
            let h1 = hosidf_reset(&el, w, 1).unwrap();
            assert!((h1 - tf.eval(w).unwrap()).norm() < 1e-12 * h1.norm().max(1.0));
            for n in [3, 5, 7] {
                assert_eq!(hosidf_reset(&el, w, n).unwrap().norm(), 0.0);
            }
        }
    }

    #[test]
    fn even_harmonics_are_exactly_zero() {
        let el = ResetElement::gfore(1.0, 0.0).unwrap();
        let series = hosidf_series(&el, 0.7, 10).unwrap();
        for n in (2..=10).step_by(2) {
            assert_eq!(series[n], Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn clegg_phase_is_frequency_independent() {
        let el = ResetElement::clegg();
        let expected = -90.0 + (4.0 / PI).atan().to_degrees();
        assert!((expected + 38.15).abs() < 0.01);
        for &w in &[0.01, 0.3, 1.0, 20.0, 1e3] {
            let p = hosidf_reset(&el, w, 1).unwrap().arg().to_degrees();
            assert!((p - expected).abs() < 1e-9, "w={w} p={p}");
        }
    }

    #[test]
    fn theta_d_high_frequency_limit() {
        for &a_rho in &[-0.5, 0.0, 0.5] {
            let el = ResetElement::gfore(2.0, a_rho).unwrap();
            let im = reset_intermediates(&el, 2.0e6).unwrap();
            let limit = 4.0 * (1.0 - a_rho) / (PI * (1.0 + a_rho));
            assert!((im.theta_d[(0, 0)] - limit).abs() < 1e-4);
        }
    }

    #[test]
    fn scalar_theta_d_closed_form() {
        // Θ_D = 2ω²(1−ρ)(1+e)/(π(ω²+ω_r²)(1+ρe)) with e = exp(−πω_r/ω).
        let (wr, rho) = (1.7, 0.25);
        let el = ResetElement::gfore(wr, rho).unwrap();
        for &w in &[0.2, 1.0, 5.0] {
            let e = (-PI * wr / w).exp();
            let closed = 2.0 * w * w * (1.0 - rho) * (1.0 + e) / (PI * (w * w + wr * wr) * (1.0 + rho * e));
            let im = reset_intermediates(&el, w).unwrap();
            assert!((im.theta_d[(0, 0)] - closed).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_export_layout() {
        let el = ResetElement::gfore(1.0, 0.0).unwrap();
        let hr = HarmonicResponse::of_reset(&el, &[0.5, 1.0], 3).unwrap();
        let csv = hr.to_csv_string();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "omega,n,re,im,truncated");
        assert_eq!(lines.len(), 1 + 2 * 3);
        assert!(lines[2].starts_with("0.5,2,0,0,0"));
    }
}
