use serde::{Deserialize, Serialize};

use super::{LtiError, RationalTf};

/// Parameters of an inverse notch (narrow-band gain boost).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NotchSpec {
    pub omega_n: f64,
    pub q1: f64,
    pub q2: f64,
}

impl NotchSpec {
    pub fn new(omega_n: f64, q1: f64, q2: f64) -> Result<Self, LtiError> {
        let spec = Self { omega_n, q1, q2 };
        spec.validate()?;
        Ok(spec)
    }

    /// Inverse notches must amplify, so `q2 / q1 > 1` is required. The
    /// degenerate `q1 == q2` case is accepted as a unity filter.
    pub fn validate(&self) -> Result<(), LtiError> {
        let finite = self.omega_n.is_finite() && self.q1.is_finite() && self.q2.is_finite();
        if !finite || self.omega_n <= 0.0 || self.q1 <= 0.0 || self.q2 <= 0.0 {
            return Err(LtiError::Invalid(format!(
                "notch requires omega_n, Q1, Q2 > 0 (got {}, {}, {})",
                self.omega_n, self.q1, self.q2
            )));
        }
        if self.q2 < self.q1 {
            return Err(LtiError::Invalid(format!(
                "inverse notch needs Q2/Q1 >= 1 (got {})",
                self.q2 / self.q1
            )));
        }
        Ok(())
    }

    pub fn peak_gain(&self) -> f64 {
        self.q2 / self.q1
    }
}

/// `(s²/ωn² + s/(ωn·Q1) + 1) / (s²/ωn² + s/(ωn·Q2) + 1)`
pub fn make_inverse_notch(spec: &NotchSpec) -> Result<RationalTf, LtiError> {
    spec.validate()?;
    let w2 = spec.omega_n * spec.omega_n;
    let num = vec![1.0 / w2, 1.0 / (spec.omega_n * spec.q1), 1.0];
    let den = vec![1.0 / w2, 1.0 / (spec.omega_n * spec.q2), 1.0];
    Ok(RationalTf::new(num, den)?.with_label("inverse_notch"))
}

/// Lead filter `(1 + s/ω_l) / (1 + s/ω_f)`.
pub fn make_lead(omega_l: f64, omega_f: f64) -> Result<RationalTf, LtiError> {
    if !(omega_l > 0.0) || !omega_f.is_finite() || omega_l > omega_f {
        return Err(LtiError::Invalid(format!(
            "lead requires 0 < omega_l <= omega_f (got {omega_l}, {omega_f})"
        )));
    }
    Ok(RationalTf::new(vec![1.0 / omega_l, 1.0], vec![1.0 / omega_f, 1.0])?.with_label("lead"))
}
