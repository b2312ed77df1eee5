//! Closed-loop frequency-domain prediction for the loop
//! `e → C_1 → R → C_2 → G` with unity feedback: higher-order sensitivities,
//! pseudo-sensitivity, robustness constraints, the Bode integral and the
//! add-on design procedure.

mod design;
mod resets;
mod robustness;
mod sensitivity;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cglp::DesignError;
use crate::hosidf::HosidfError;
use crate::lti::{tustin_warp, FrfTable, LtiError, RationalTf, TfChain};
use crate::reset::{bls_tf, ResetElement};
use crate::sim::SimError;

pub use design::{
    assemble_addon_loop, design_addon, detect_crossover, evaluate_addon, AddonDesign, AddonEvaluation, AddonRequest,
    NotchDelta, NotchPlacement, Verdict,
};
pub use resets::{two_resets_check, ResetCheck};
pub use robustness::{robustness_check, RobustnessReport, Thresholds};
pub use sensitivity::{
    bode_integral, harmonics_at, improvement_indicator, pseudo_sensitivity, sensitivity_curves, sensitivity_harmonic,
    suggest_omega_res, PointHarmonics, PseudoSensitivity, SensitivityCurves, PHASE_GRID,
};

/// Default odd-harmonic cap.
pub const DEFAULT_N_MAX: usize = 39;
/// `|1 + L_1|` below this is treated as a closed loop on the stability boundary.
pub const LOOP_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum AnalysisError {
    #[error("closed loop is near-singular at omega = {omega} (|1 + L| = {magnitude:e})")]
    NearSingular { omega: f64, magnitude: f64 },
    #[error("invalid analysis input: {0}")]
    Invalid(String),
    #[error("curve value at omega = {omega} is not positive ({value})")]
    Domain { omega: f64, value: f64 },
    #[error(transparent)]
    Lti(#[from] LtiError),
    #[error(transparent)]
    Hosidf(#[from] HosidfError),
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Plant description: measured FRF or a parametric model.
#[derive(Debug, Clone, PartialEq)]
pub enum Plant {
    Frf(FrfTable),
    Model(TfChain),
}

impl Plant {
    pub fn model(tf: RationalTf) -> Self {
        Plant::Model(TfChain::from(tf))
    }

    pub fn as_model(&self) -> Option<&TfChain> {
        match self {
            Plant::Model(m) => Some(m),
            Plant::Frf(_) => None,
        }
    }

    /// Continuous-time response; FRF tables signal out-of-range queries.
    pub fn response(&self, omega: f64) -> Result<Complex64, LtiError> {
        match self {
            Plant::Frf(t) => t.interp(omega),
            Plant::Model(m) => m.eval(omega),
        }
    }

    /// Frequency range where the plant response is available.
    pub fn range(&self) -> (f64, f64) {
        match self {
            Plant::Frf(t) => (t.omega_min(), t.omega_max()),
            Plant::Model(_) => (0.0, f64::INFINITY),
        }
    }
}

/// How LTI blocks are evaluated in the frequency domain.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FrequencyModel {
    #[default]
    Continuous,
    /// Mirrors the sampled simulator: blocks are evaluated at the Tustin
    /// pre-warped frequency (the exact response of their discretization) and
    /// the plant carries the one-sample loop-closure delay `e^{−jωT}`. The
    /// reset element describing functions stay continuous. Frequencies at or
    /// above Nyquist are reported out of range.
    Discrete { ts: f64 },
}

impl FrequencyModel {
    fn lti_frequency(&self, omega: f64) -> Result<f64, LtiError> {
        match *self {
            FrequencyModel::Continuous => Ok(omega),
            FrequencyModel::Discrete { ts } => {
                let nyquist = PI / ts;
                if omega >= nyquist {
                    return Err(LtiError::OutOfRange {
                        omega,
                        min: 0.0,
                        max: nyquist,
                    });
                }
                Ok(tustin_warp(omega, ts))
            }
        }
    }

    fn delay(&self, omega: f64) -> Complex64 {
        match *self {
            FrequencyModel::Continuous => Complex64::new(1.0, 0.0),
            FrequencyModel::Discrete { ts } => Complex64::from_polar(1.0, -omega * ts),
        }
    }
}

/// Reset control loop `e → C_1 → R → C_2 → G` with unity negative feedback.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopConfig {
    pub c1: TfChain,
    pub reset: ResetElement,
    pub c2: TfChain,
    pub plant: Plant,
    pub n_max: usize,
    /// Reference amplitude of the sinusoidal excitation.
    pub r0: f64,
    pub frequency_model: FrequencyModel,
}

impl LoopConfig {
    pub fn new(c1: TfChain, reset: ResetElement, c2: TfChain, plant: Plant) -> Self {
        Self {
            c1,
            reset,
            c2,
            plant,
            n_max: DEFAULT_N_MAX,
            r0: 1.0,
            frequency_model: FrequencyModel::Continuous,
        }
    }

    /// Purely linear loop `C·G`, expressed with a passthrough reset element.
    pub fn linear(controller: TfChain, plant: Plant) -> Self {
        Self::new(TfChain::unity(), ResetElement::passthrough(), controller, plant)
    }

    pub fn with_n_max(mut self, n_max: usize) -> Self {
        self.n_max = n_max.max(1);
        self
    }

    pub fn with_frequency_model(mut self, model: FrequencyModel) -> Self {
        self.frequency_model = model;
        self
    }

    /// Same loop with the reset element's coefficients set to one.
    pub fn base_linear(&self) -> Self {
        let mut out = self.clone();
        out.reset = self.reset.with_a_rho(1.0).expect("1 is an admissible coefficient");
        out
    }

    pub fn plant_response(&self, omega: f64) -> Result<Complex64, LtiError> {
        let delay = self.frequency_model.delay(omega);
        match &self.plant {
            Plant::Frf(t) => {
                // Measured data: only the sampling delay applies.
                self.frequency_model.lti_frequency(omega)?;
                Ok(t.interp(omega)? * delay)
            }
            Plant::Model(m) => Ok(m.eval(self.frequency_model.lti_frequency(omega)?)? * delay),
        }
    }

    pub fn c1_response(&self, omega: f64) -> Result<Complex64, LtiError> {
        self.c1.eval(self.frequency_model.lti_frequency(omega)?)
    }

    pub fn c2_response(&self, omega: f64) -> Result<Complex64, LtiError> {
        self.c2.eval(self.frequency_model.lti_frequency(omega)?)
    }

    pub fn bls_response(&self, omega: f64) -> Result<Complex64, LtiError> {
        bls_tf(&self.reset).eval(self.frequency_model.lti_frequency(omega)?)
    }

    /// Base linear open loop `C_1 R C_2 G` at `ω`.
    pub fn base_linear_open_loop(&self, omega: f64) -> Result<Complex64, LtiError> {
        Ok(self.c1_response(omega)?
            * self.bls_response(omega)?
            * self.c2_response(omega)?
            * self.plant_response(omega)?)
    }
}

/// Open loop `C·G` of a linear controller on the loop's plant and frequency model.
pub(crate) fn linear_open_loop(lp: &LoopConfig, controller: &TfChain, omega: f64) -> Result<Complex64, LtiError> {
    Ok(controller.eval(lp.frequency_model.lti_frequency(omega)?)? * lp.plant_response(omega)?)
}
