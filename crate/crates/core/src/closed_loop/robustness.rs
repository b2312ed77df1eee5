use serde::{Deserialize, Serialize};

use super::AnalysisError;

/// Constraint thresholds. Peaks are in dB; `delta_s_pct` is the largest
/// acceptable improvement indicator at each targeted notch frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    pub m_s_db: f64,
    pub m_r_db: f64,
    pub delta_s_pct: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            m_s_db: 6.0,
            m_r_db: 2.5,
            delta_s_pct: 0.0,
        }
    }
}

/// Peak sensitivity below and above the split frequency `ω_res`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub m_s_db: f64,
    pub m_r_db: f64,
    pub omega_res: f64,
    pub m_s_threshold_db: f64,
    pub m_r_threshold_db: f64,
    pub m_s_pass: bool,
    pub m_r_pass: bool,
    /// `1/M_s` on a linear scale.
    pub modulus_margin: f64,
}

impl RobustnessReport {
    pub fn passed(&self) -> bool {
        self.m_s_pass && self.m_r_pass
    }
}

fn db(x: f64) -> f64 {
    20.0 * x.log10()
}

/// Splits the curve at `ω_res`: `M_s` is the peak over `ω < ω_res`, `M_r`
/// the peak over `ω ≥ ω_res`. Each must not exceed its threshold.
pub fn robustness_check(
    omega: &[f64],
    curve: &[f64],
    omega_res: f64,
    thresholds: &Thresholds,
) -> Result<RobustnessReport, AnalysisError> {
    if omega.len() != curve.len() || omega.is_empty() {
        return Err(AnalysisError::Invalid(
            "grid and curve must be non-empty and of equal length".into(),
        ));
    }
    if !(omega_res > omega[0] && omega_res <= omega[omega.len() - 1]) {
        return Err(AnalysisError::Invalid(format!(
            "omega_res = {omega_res} must lie inside the grid ({}, {}]",
            omega[0],
            omega[omega.len() - 1]
        )));
    }
    let (mut m_s, mut m_r) = (0.0f64, 0.0f64);
    for (&w, &c) in omega.iter().zip(curve) {
        if w < omega_res {
            m_s = m_s.max(c);
        } else {
            m_r = m_r.max(c);
        }
    }
    let (m_s_db, m_r_db) = (db(m_s), db(m_r));
    Ok(RobustnessReport {
        m_s_db,
        m_r_db,
        omega_res,
        m_s_threshold_db: thresholds.m_s_db,
        m_r_threshold_db: thresholds.m_r_db,
        m_s_pass: m_s_db <= thresholds.m_s_db,
        m_r_pass: m_r_db <= thresholds.m_r_db,
        modulus_margin: 1.0 / m_s,
    })
}
