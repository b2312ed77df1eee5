use serde::{Deserialize, Serialize};

use super::{
    harmonics_at, linear_open_loop, pseudo_sensitivity, robustness_check, sensitivity_curves, AnalysisError,
    FrequencyModel, LoopConfig, Plant, RobustnessReport, SensitivityCurves, Thresholds, DEFAULT_N_MAX,
};
use crate::cglp::{make_cglp, solve_omega_f, CglpDesign, PhaseTarget};
use crate::lti::{make_inverse_notch, NotchSpec, TfChain};
use crate::reset::ResetElement;

/// Inverse notch together with its position in the loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NotchPlacement {
    #[serde(flatten)]
    pub spec: NotchSpec,
    /// Place the notch in `C_1` (before the reset element) instead of `C_2`.
    #[serde(default)]
    pub in_c1: bool,
}

impl From<NotchSpec> for NotchPlacement {
    fn from(spec: NotchSpec) -> Self {
        Self { spec, in_c1: false }
    }
}

/// Inputs of the add-on design procedure.
#[derive(Debug, Clone)]
pub struct AddonRequest {
    pub plant: Plant,
    /// Existing linear controller `C_L`.
    pub c_l: TfChain,
    pub notches: Vec<NotchPlacement>,
    pub omega_l: f64,
    pub a_rho: f64,
    /// Crossover of `C_L·G`; detected on `grid` when absent.
    pub omega_c: Option<f64>,
    pub c_f: f64,
    pub grid: Vec<f64>,
    pub omega_res: f64,
    pub thresholds: Thresholds,
    pub n_max: usize,
    pub frequency_model: FrequencyModel,
}

impl AddonRequest {
    pub fn new(plant: Plant, c_l: TfChain, grid: Vec<f64>, omega_res: f64) -> Self {
        Self {
            plant,
            c_l,
            notches: Vec::new(),
            omega_l: f64::NAN,
            a_rho: 0.0,
            omega_c: None,
            c_f: 1.0,
            grid,
            omega_res,
            thresholds: Thresholds::default(),
            n_max: DEFAULT_N_MAX,
            frequency_model: FrequencyModel::Continuous,
        }
    }
}

/// `δ_s` evaluated exactly at a notch frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NotchDelta {
    pub omega_n: f64,
    pub delta_s_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub pass: bool,
    pub notch_deltas: Vec<NotchDelta>,
    /// Human-readable reasons for a failing verdict.
    pub reasons: Vec<String>,
}

/// Result of the add-on design procedure.
#[derive(Debug, Clone)]
pub struct AddonDesign {
    /// `None` when no phase compensation was required and the loop stayed linear.
    pub design: Option<CglpDesign>,
    pub omega_c: f64,
    /// Required CgLp phase at `omega_c`, radians.
    pub theta_target: f64,
    /// Linear part of the add-on filter: `k_c·C_𝔠·C_N`.
    pub c_g_linear: TfChain,
    pub loop_config: LoopConfig,
    pub curves: SensitivityCurves,
    pub report: RobustnessReport,
    pub verdict: Verdict,
}

/// First downward crossing of `|C·G| = 1` on the grid, interpolated linearly
/// in `log ω` versus `log |L|`.
pub fn detect_crossover(plant: &Plant, controller: &TfChain, grid: &[f64], model: FrequencyModel) -> Option<f64> {
    let probe = LoopConfig::linear(controller.clone(), plant.clone()).with_frequency_model(model);
    let mags: Vec<Option<f64>> = grid
        .iter()
        .map(|&w| linear_open_loop(&probe, controller, w).ok().map(|l| l.norm()))
        .collect();
    for i in 0..grid.len().saturating_sub(1) {
        if let (Some(a), Some(b)) = (mags[i], mags[i + 1]) {
            if a >= 1.0 && b < 1.0 {
                let (la, lb) = (a.ln(), b.ln());
                let t = la / (la - lb);
                let (wa, wb) = (grid[i].ln(), grid[i + 1].ln());
                return Some((wa + t * (wb - wa)).exp());
            }
        }
    }
    None
}

/// Composes the notches of `notches` into the `C_1` part and the `C_2` part.
fn split_notches(notches: &[NotchPlacement]) -> Result<(TfChain, TfChain, TfChain), AnalysisError> {
    let mut c1 = TfChain::unity();
    let mut c_n2 = TfChain::unity();
    let mut all = TfChain::unity();
    for p in notches {
        let tf = make_inverse_notch(&p.spec)?;
        all = all.then(tf.clone());
        if p.in_c1 {
            c1 = c1.then(tf);
        } else {
            c_n2 = c_n2.then(tf);
        }
    }
    Ok((c1, c_n2, all))
}

/// Loop with an existing add-on: notches flagged `in_c1` in `C_1`, the reset
/// element of `design` (a passthrough when `None`), and `k_c·C_𝔠·C_N·C_L` in
/// `C_2`. Also returns the linear part of the add-on, `k_c·C_𝔠·C_N`.
pub fn assemble_addon_loop(
    plant: &Plant,
    c_l: &TfChain,
    notches: &[NotchPlacement],
    design: Option<&CglpDesign>,
) -> Result<(LoopConfig, TfChain), AnalysisError> {
    let (c1, c_n2, c_n_all) = split_notches(notches)?;
    let (reset, lead) = match design {
        Some(d) => (d.reset_element(), TfChain::from(d.linear_part())),
        None => (ResetElement::passthrough(), TfChain::unity()),
    };
    let c2 = lead.clone().chain(&c_n2).chain(c_l);
    let c_g_linear = lead.chain(&c_n_all);
    Ok((LoopConfig::new(c1, reset, c2, plant.clone()), c_g_linear))
}

/// Curves, constraint report and verdict of an assembled add-on loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AddonEvaluation {
    pub curves: SensitivityCurves,
    pub report: RobustnessReport,
    pub verdict: Verdict,
}

/// Evaluates `lp` against the linear controller `c_l` and checks the
/// robustness thresholds and the sensitivity change at every notch frequency.
pub fn evaluate_addon(
    lp: &LoopConfig,
    c_l: &TfChain,
    notches: &[NotchPlacement],
    grid: &[f64],
    omega_res: f64,
    thresholds: &Thresholds,
) -> Result<AddonEvaluation, AnalysisError> {
    let curves = sensitivity_curves(lp, Some(c_l), grid)?;
    let report = robustness_check(&curves.omega, &curves.s_inf, omega_res, thresholds)?;

    let mut reasons = Vec::new();
    if !report.m_s_pass {
        reasons.push(format!(
            "M_s = {:.3} dB exceeds {:.3} dB",
            report.m_s_db, report.m_s_threshold_db
        ));
    }
    if !report.m_r_pass {
        reasons.push(format!(
            "M_r = {:.3} dB exceeds {:.3} dB",
            report.m_r_db, report.m_r_threshold_db
        ));
    }
    let mut notch_deltas = Vec::new();
    for p in notches {
        let wn = p.spec.omega_n;
        let s_lin = (1.0 + linear_open_loop(lp, c_l, wn)?).inv().norm();
        let s_inf = pseudo_sensitivity(&harmonics_at(lp, wn)?.s).signed_max;
        let delta = 100.0 * (s_inf - s_lin) / s_lin;
        if !(delta < thresholds.delta_s_pct) {
            reasons.push(format!(
                "delta_s at omega_n = {wn} is {delta:.2}%, not below {}%",
                thresholds.delta_s_pct
            ));
        }
        notch_deltas.push(NotchDelta {
            omega_n: wn,
            delta_s_pct: delta,
        });
    }
    let verdict = Verdict {
        pass: reasons.is_empty(),
        notch_deltas,
        reasons,
    };
    Ok(AddonEvaluation {
        curves,
        report,
        verdict,
    })
}

/// Designs the CgLp-plus-notch add-on for `C_L` and evaluates it.
///
/// The CgLp phase at crossover cancels the notch phase lag; `ω_f` follows from
/// the backward solve. The loop is assembled by [`assemble_addon_loop`].
pub fn design_addon(req: &AddonRequest) -> Result<AddonDesign, AnalysisError> {
    let model = req.frequency_model;
    let omega_c = match req.omega_c {
        Some(w) => w,
        None => detect_crossover(&req.plant, &req.c_l, &req.grid, model)
            .ok_or_else(|| AnalysisError::Invalid("no crossover of C_L·G found on the analysis grid".into()))?,
    };
    let (_, _, c_n_all) = split_notches(&req.notches)?;
    let theta_target = -c_n_all.eval(omega_c)?.arg();

    let design = if theta_target <= 0.0 || req.notches.is_empty() {
        None
    } else {
        if let Some(wn) = req.notches.iter().map(|p| p.spec.omega_n).reduce(f64::max) {
            if !(req.omega_l >= wn && req.omega_l <= omega_c) {
                return Err(AnalysisError::Invalid(format!(
                    "omega_l = {} must lie in [{wn}, {omega_c}] (highest notch to crossover)",
                    req.omega_l
                )));
            }
        }
        let omega_f = solve_omega_f(
            req.omega_l,
            req.a_rho,
            PhaseTarget {
                omega_c,
                theta: theta_target,
            },
        )?;
        Some(make_cglp(req.omega_l, omega_f, req.a_rho, req.c_f)?)
    };

    let (lp, c_g_linear) = assemble_addon_loop(&req.plant, &req.c_l, &req.notches, design.as_ref())?;
    let lp = lp.with_n_max(req.n_max).with_frequency_model(model);
    let AddonEvaluation {
        curves,
        report,
        verdict,
    } = evaluate_addon(&lp, &req.c_l, &req.notches, &req.grid, req.omega_res, &req.thresholds)?;
    Ok(AddonDesign {
        design,
        omega_c,
        theta_target,
        c_g_linear,
        loop_config: lp,
        curves,
        report,
        verdict,
    })
}
