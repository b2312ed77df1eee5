//! Synthetic motion stage and baseline controller used by examples, tests
//! and the default CLI configuration.
//!
//! The plant is a light moving mass `m1` on a heavy, softly mounted base
//! `m2`, with position measured relative to the base:
//!
//! ```text
//! G(s) = ((m1 + m2)s² + c s + k) / (m2 s² + c s + k) · 1/(m1 s²)
//! ```
//!
//! The base mode (the pole pair `√(k/m2)`) sits at 1 Hz, a twentieth of the
//! 20 Hz crossover. The baseline controller is a PID with integrator corner
//! `ω_c/10`, lead from `ω_c/3` to `3ω_c`, and a first-order roll-off at
//! `10ω_c`, scaled for unit loop gain at `ω_c`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::closed_loop::{AddonRequest, Plant};
use crate::lti::{log_grid, NotchSpec, RationalTf, TfChain};
use crate::sim::{DisturbanceSpec, MoveProfile, Scenario};

/// Sample time of the time-domain runs (2 kHz).
pub const SAMPLE_TIME: f64 = 5e-4;
/// Target crossover, rad/s.
pub const CROSSOVER: f64 = 2.0 * PI * 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoMassParams {
    pub m1: f64,
    pub m2: f64,
    pub mode_hz: f64,
    pub zeta: f64,
}

impl Default for TwoMassParams {
    fn default() -> Self {
        Self {
            m1: 1.0,
            m2: 20.0,
            mode_hz: 1.0,
            zeta: 0.02,
        }
    }
}

impl TwoMassParams {
    pub fn mode_omega(&self) -> f64 {
        2.0 * PI * self.mode_hz
    }

    pub fn stiffness(&self) -> f64 {
        self.m2 * self.mode_omega().powi(2)
    }

    pub fn damping(&self) -> f64 {
        2.0 * self.zeta * (self.stiffness() * self.m2).sqrt()
    }

    pub fn plant(&self) -> TfChain {
        let (k, c) = (self.stiffness(), self.damping());
        let base = RationalTf::new(vec![self.m1 + self.m2, c, k], vec![self.m2, c, k])
            .expect("valid base factor")
            .with_label("base_mode");
        let body = RationalTf::new(vec![1.0], vec![self.m1, 0.0, 0.0])
            .expect("valid rigid body")
            .with_label("rigid_body");
        TfChain::from_iter([base, body])
    }
}

/// PID-type baseline `K(1 + ω_i/s)(1 + s/ω_z)/(1 + s/ω_p)/(1 + s/ω_lp)` with
/// `K` chosen for `|C·G(jω_c)| = 1`.
pub fn baseline_controller(plant: &TfChain, omega_c: f64) -> TfChain {
    let (wi, wz, wp, wlp) = (omega_c / 10.0, omega_c / 3.0, 3.0 * omega_c, 10.0 * omega_c);
    let integ = RationalTf::new(vec![1.0, wi], vec![1.0, 0.0]).expect("integrator");
    let lead = RationalTf::new(vec![1.0 / wz, 1.0], vec![1.0 / wp, 1.0]).expect("lead");
    let lp = RationalTf::new(vec![1.0], vec![1.0 / wlp, 1.0]).expect("low-pass");
    let shape = TfChain::from_iter([integ, lead, lp]);
    let l = shape.eval(omega_c).expect("finite") * plant.eval(omega_c).expect("finite");
    let k = 1.0 / l.norm();
    TfChain::from(RationalTf::gain(k).with_label("gain")).chain(&shape)
}

/// Everything needed to run the reference design workflow.
#[derive(Debug, Clone)]
pub struct Reference {
    pub params: TwoMassParams,
    pub plant: TfChain,
    pub c_l: TfChain,
    pub omega_c: f64,
    pub omega_res: f64,
    pub ts: f64,
    pub notch: NotchSpec,
    pub omega_l: f64,
    pub a_rho: f64,
    pub c_f: f64,
}

impl Reference {
    pub fn grid(&self) -> Vec<f64> {
        log_grid(self.omega_c / 100.0, self.omega_c * 20.0, 60)
    }

    /// Short forward and backward move followed by a slowly decaying force at
    /// the base-mode frequency, as a base-frame vibration would inject.
    pub fn scenario(&self) -> Scenario {
        Scenario {
            profile: MoveProfile {
                distance: 0.01,
                move_time: 0.05,
                hold_time: 8.0,
                pre_time: 0.05,
                backward: true,
                band: 1e-5,
                ts: self.ts,
            },
            disturbance: Some(DisturbanceSpec {
                amplitude: 1.0,
                omega: self.params.mode_omega(),
                decay: 0.5,
            }),
            noise_std: 1e-7,
            seed: 1,
            psd_segment: Some(4096),
        }
    }

    /// Add-on request with the notch in `C_2`.
    pub fn addon_request(&self) -> AddonRequest {
        let mut req = AddonRequest::new(
            Plant::Model(self.plant.clone()),
            self.c_l.clone(),
            self.grid(),
            self.omega_res,
        );
        req.notches = vec![self.notch.into()];
        req.omega_l = self.omega_l;
        req.a_rho = self.a_rho;
        req.omega_c = Some(self.omega_c);
        req.c_f = self.c_f;
        req
    }
}

/// Synthetic stage, baseline controller and the add-on parameters that
/// target the base mode.
pub fn reference() -> Reference {
    let params = TwoMassParams::default();
    let plant = params.plant();
    let c_l = baseline_controller(&plant, CROSSOVER);
    let wn = params.mode_omega();
    Reference {
        params,
        plant,
        c_l,
        omega_c: CROSSOVER,
        omega_res: 3.0 * CROSSOVER,
        ts: SAMPLE_TIME,
        notch: NotchSpec::new(wn, 0.8, 1.6).expect("valid notch"),
        omega_l: 3.0 * wn,
        a_rho: 0.0,
        c_f: 1.0,
    }
}
