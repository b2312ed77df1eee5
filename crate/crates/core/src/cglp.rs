//! Constant-gain lead-phase (CgLp) filter: construction from the lead corners,
//! phase formulas, and the backward solve for the upper corner from a desired
//! phase at one frequency.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hosidf::HosidfError;
use crate::lti::{LtiError, RationalTf};
use crate::reset::ResetElement;

/// Tolerance applied when checking derived fields supplied on input.
pub const DERIVED_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DesignError {
    #[error("invalid design parameter: {0}")]
    Invalid(String),
    #[error("required phase {theta:.6} rad is outside the feasible range (0, {theta_max:.6}) rad at omega = {omega}")]
    Infeasible { theta: f64, theta_max: f64, omega: f64 },
    #[error("no admissible omega_f: {0}")]
    NoSolution(String),
    #[error(transparent)]
    Hosidf(#[from] HosidfError),
    #[error(transparent)]
    Lti(#[from] LtiError),
}

/// Desired CgLp phase at one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseTarget {
    pub omega_c: f64,
    /// Radians.
    pub theta: f64,
}

/// A modified CgLp: proportional GFORE in series with `k_c` and a lead filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DesignRepr", into = "DesignRepr")]
pub struct CglpDesign {
    pub omega_l: f64,
    pub omega_f: f64,
    pub omega_r: f64,
    pub k_c: f64,
    pub d_r: f64,
    pub a_rho: f64,
    pub c_f: f64,
    /// Conventional CgLp: the feedthrough `D_r` is forced to zero.
    pub conventional: bool,
}

#[derive(Serialize, Deserialize)]
struct DerivedRepr {
    omega_r: f64,
    k_c: f64,
    #[serde(rename = "D_r")]
    d_r: f64,
}

#[derive(Serialize, Deserialize)]
struct DesignRepr {
    omega_l: f64,
    omega_f: f64,
    #[serde(rename = "A_rho")]
    a_rho: f64,
    #[serde(default = "one")]
    c_f: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    conventional: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    derived: Option<DerivedRepr>,
}

fn one() -> f64 {
    1.0
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= DERIVED_TOLERANCE * b.abs().max(1.0)
}

impl TryFrom<DesignRepr> for CglpDesign {
    type Error = DesignError;

    fn try_from(r: DesignRepr) -> Result<Self, Self::Error> {
        let mut d = make_cglp(r.omega_l, r.omega_f, r.a_rho, r.c_f)?;
        if r.conventional {
            d = d.into_conventional();
        }
        if let Some(der) = r.derived {
            for (name, given, want) in [
                ("omega_r", der.omega_r, d.omega_r),
                ("k_c", der.k_c, d.k_c),
                ("D_r", der.d_r, d.d_r),
            ] {
                if !close(given, want) {
                    return Err(DesignError::Invalid(format!(
                        "derived.{name} = {given} is inconsistent with the inputs (expected {want})"
                    )));
                }
            }
        }
        Ok(d)
    }
}

impl From<CglpDesign> for DesignRepr {
    fn from(d: CglpDesign) -> Self {
        DesignRepr {
            omega_l: d.omega_l,
            omega_f: d.omega_f,
            a_rho: d.a_rho,
            c_f: d.c_f,
            conventional: d.conventional,
            derived: Some(DerivedRepr {
                omega_r: d.omega_r,
                k_c: d.k_c,
                d_r: d.d_r,
            }),
        }
    }
}

/// `4(1−A_ρ)/(π(1+A_ρ))`, the high-frequency limit of `Θ_D` for a GFORE.
pub fn theta_d_limit(a_rho: f64) -> f64 {
    4.0 * (1.0 - a_rho) / (PI * (1.0 + a_rho))
}

/// GFORE corner that matches the high-frequency DF gain of a first-order
/// low-pass with corner `ω_l`.
pub fn omega_r_for(omega_l: f64, a_rho: f64) -> f64 {
    let t = theta_d_limit(a_rho);
    omega_l / (1.0 + t * t).sqrt()
}

fn check_a_rho(a_rho: f64) -> Result<(), DesignError> {
    if !(a_rho > -1.0 && a_rho <= 1.0) {
        return Err(DesignError::Invalid(format!("A_rho must lie in (-1, 1], got {a_rho}")));
    }
    Ok(())
}

/// Builds the modified CgLp from its lead corners, reset coefficient and
/// lead detuning factor `c_f`.
pub fn make_cglp(omega_l: f64, omega_f: f64, a_rho: f64, c_f: f64) -> Result<CglpDesign, DesignError> {
    if !(omega_l > 0.0 && omega_l.is_finite()) {
        return Err(DesignError::Invalid(format!("omega_l must be > 0, got {omega_l}")));
    }
    if !(omega_f > omega_l && omega_f.is_finite()) {
        return Err(DesignError::Invalid(format!(
            "omega_f must exceed omega_l (got omega_l = {omega_l}, omega_f = {omega_f})"
        )));
    }
    check_a_rho(a_rho)?;
    if !(c_f >= 1.0 && c_f.is_finite()) {
        return Err(DesignError::Invalid(format!("c_f must be >= 1, got {c_f}")));
    }
    Ok(CglpDesign {
        omega_l,
        omega_f,
        omega_r: omega_r_for(omega_l, a_rho),
        k_c: (omega_f - omega_l) / omega_f,
        d_r: omega_l / (omega_f - omega_l),
        a_rho,
        c_f,
        conventional: false,
    })
}

impl CglpDesign {
    /// Same design with `D_r = 0`; every other parameter is kept.
    pub fn into_conventional(mut self) -> Self {
        self.d_r = 0.0;
        self.conventional = true;
        self
    }

    /// Proportional GFORE `(−ω_r, 1, ω_r, D_r)` with reset coefficient `A_ρ`.
    pub fn reset_element(&self) -> ResetElement {
        ResetElement::proportional_gfore(self.omega_r, self.d_r, self.a_rho)
            .expect("design invariants guarantee a valid element")
    }

    /// Lead `(1 + s/ω_l)/(1 + s·c_f/ω_f)`.
    pub fn lead_tf(&self) -> RationalTf {
        RationalTf::new(vec![1.0 / self.omega_l, 1.0], vec![self.c_f / self.omega_f, 1.0])
            .expect("positive corners")
            .with_label("cglp_lead")
    }

    /// `k_c · C_𝔠(s)`, the linear part placed after the reset element.
    pub fn linear_part(&self) -> RationalTf {
        self.lead_tf().scale(self.k_c).with_label("cglp_linear")
    }
}

/// Real and imaginary part of `ω_r(1 + jΘ_D(ω))/(ω_r + jω)`, the GFORE first
/// harmonic without feedthrough. Independent of `ω_f`.
pub fn phase_components(omega_l: f64, a_rho: f64, omega: f64) -> (f64, f64) {
    let wr = omega_r_for(omega_l, a_rho);
    let theta = gfore_theta_d(wr, a_rho, omega);
    let den = wr * wr + omega * omega;
    // (ω_r + jω_rΘ)(ω_r − jω) / (ω_r² + ω²)
    let a = wr * (wr + theta * omega) / den;
    let b = wr * (wr * theta - omega) / den;
    (a, b)
}

/// Closed-form `Θ_D(ω)` of a scalar GFORE.
pub fn gfore_theta_d(omega_r: f64, a_rho: f64, omega: f64) -> f64 {
    let e = (-PI * omega_r / omega).exp();
    2.0 * omega * omega * (1.0 - a_rho) * (1.0 + e) / (PI * (omega * omega + omega_r * omega_r) * (1.0 + a_rho * e))
}

/// Phase of the CgLp first-order describing function at `ω`.
pub fn theta_cglp(design: &CglpDesign, omega: f64) -> f64 {
    let (a, b) = phase_components(design.omega_l, design.a_rho, omega);
    (b / (a + design.d_r)).atan() + (omega / design.omega_l).atan() - (omega * design.c_f / design.omega_f).atan()
}

/// Largest CgLp phase reachable at `ω`, attained as `ω_f → ∞`.
pub fn theta_max(omega_l: f64, a_rho: f64, omega: f64) -> f64 {
    let (a, b) = phase_components(omega_l, a_rho, omega);
    (b / a).atan() + (omega / omega_l).atan()
}

/// Upper lead corner `ω_f` giving the CgLp phase `target.theta` at
/// `target.omega_c`, via the closed-form quadratic.
pub fn solve_omega_f(omega_l: f64, a_rho: f64, target: PhaseTarget) -> Result<f64, DesignError> {
    let w = target.omega_c;
    if !(omega_l > 0.0 && w > 0.0 && w.is_finite()) {
        return Err(DesignError::Invalid(format!(
            "omega_l and omega_c must be positive (got {omega_l}, {w})"
        )));
    }
    check_a_rho(a_rho)?;
    let theta_m = theta_max(omega_l, a_rho, w);
    if !(target.theta > 0.0 && target.theta < theta_m) {
        return Err(DesignError::Infeasible {
            theta: target.theta,
            theta_max: theta_m,
            omega: w,
        });
    }
    let (a, b) = phase_components(omega_l, a_rho, w);
    let q = (target.theta - (w / omega_l).atan()).tan();
    let k1 = a * q - b;
    let k2 = b * w * q + b * omega_l + a * w - (a - 1.0) * omega_l * q;
    let k3 = -w * omega_l * (b * q + a - 1.0);

    if k1.abs() < 1e-12 * k2.abs() {
        let root = -k3 / k2;
        return if root >= omega_l && root.is_finite() {
            Ok(root)
        } else {
            Err(DesignError::NoSolution(format!("linear root {root} below omega_l")))
        };
    }
    let disc = k2 * k2 - 4.0 * k1 * k3;
    if disc < 0.0 {
        return Err(DesignError::NoSolution(format!(
            "complex roots (discriminant {disc:e})"
        )));
    }
    let sq = disc.sqrt();
    // Cancellation-free pair of quadratic roots.
    let qq = -0.5 * (k2 + k2.signum() * sq);
    let (r1, r2) = if qq == 0.0 { (0.0, 0.0) } else { (qq / k1, k3 / qq) };
    let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
    let pick = if lo >= omega_l { lo } else { hi };
    if pick >= omega_l && pick.is_finite() {
        Ok(pick)
    } else {
        Err(DesignError::NoSolution(format!(
            "roots {lo} and {hi} both below omega_l = {omega_l}"
        )))
    }
}
