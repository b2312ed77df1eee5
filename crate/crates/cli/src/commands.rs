//! Commands shared by the CLI and the HTTP service. Each takes a resolved
//! configuration and returns a serializable report plus any bulky artifacts
//! (traces, spectra) that only the file writer needs.

use std::time::Instant;

use resetloop_core::cglp::{theta_max, CglpDesign, DesignError};
use resetloop_core::closed_loop::{
    assemble_addon_loop, bode_integral, design_addon, detect_crossover, evaluate_addon, harmonics_at, AddonEvaluation,
    AddonRequest, AnalysisError, LoopConfig, NotchPlacement,
};
use resetloop_core::hosidf::{cglp_hosidf, HosidfError};
use resetloop_core::lti::TfChain;
use resetloop_core::plot::db;
use resetloop_core::sim::{
    run_scenario, run_scenario_until, simulate_sinusoid_closed_loop, Psd, RunMetrics, Scenario, SimError, SimTrace,
    SteadyOptions,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, FieldError, Resolved};

/// Version carried by every report and response body.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngleUnit {
    #[default]
    Rad,
    Deg,
}

impl AngleUnit {
    pub fn convert(self, rad: f64) -> f64 {
        match self {
            AngleUnit::Rad => rad,
            AngleUnit::Deg => rad.to_degrees(),
        }
    }

    pub fn suffix(self) -> &'static str {
        match self {
            AngleUnit::Rad => "rad",
            AngleUnit::Deg => "deg",
        }
    }
}

#[derive(Debug, Error)]
pub enum CommandError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("required phase {theta:.6} rad at omega = {omega} exceeds the maximum feasible phase {theta_max:.6} rad")]
    Infeasible { theta: f64, theta_max: f64, omega: f64 },
    #[error("{0}")]
    Rejected(String),
    #[error("simulation exceeded its wall-clock budget after {samples} samples")]
    Budget { samples: usize },
    #[error("internal error: {0}")]
    Internal(String),
}

impl CommandError {
    /// Field-level details for validation failures.
    pub fn field_errors(&self) -> Vec<FieldError> {
        match self {
            CommandError::Config(c) => c.field_errors(),
            _ => Vec::new(),
        }
    }
}

impl From<AnalysisError> for CommandError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Design(d) => d.into(),
            AnalysisError::Sim(s) => s.into(),
            other => CommandError::Rejected(other.to_string()),
        }
    }
}

impl From<DesignError> for CommandError {
    fn from(e: DesignError) -> Self {
        match e {
            DesignError::Infeasible {
                theta,
                theta_max,
                omega,
            } => CommandError::Infeasible {
                theta,
                theta_max,
                omega,
            },
            other => CommandError::Rejected(other.to_string()),
        }
    }
}

impl From<SimError> for CommandError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::DeadlineExceeded { k } => CommandError::Budget { samples: k },
            other => CommandError::Rejected(other.to_string()),
        }
    }
}

impl From<HosidfError> for CommandError {
    fn from(e: HosidfError) -> Self {
        CommandError::Rejected(e.to_string())
    }
}

/// Describing functions of the CgLp on the analysis grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CglpResponse {
    pub omega: Vec<f64>,
    pub c1_mag_db: Vec<f64>,
    pub c1_phase: Vec<f64>,
    pub c3_mag_db: Vec<f64>,
    pub c3_phase: Vec<f64>,
    /// `100·|𝔠_3|/|𝔠_1|`.
    pub harmonic_ratio_pct: Vec<f64>,
}

fn cglp_response(d: &CglpDesign, grid: &[f64], unit: AngleUnit) -> Result<CglpResponse, CommandError> {
    let mut out = CglpResponse {
        omega: grid.to_vec(),
        c1_mag_db: Vec::with_capacity(grid.len()),
        c1_phase: Vec::with_capacity(grid.len()),
        c3_mag_db: Vec::with_capacity(grid.len()),
        c3_phase: Vec::with_capacity(grid.len()),
        harmonic_ratio_pct: Vec::with_capacity(grid.len()),
    };
    for &w in grid {
        let c1 = cglp_hosidf(d, w, 1)?;
        let c3 = cglp_hosidf(d, w, 3)?;
        out.c1_mag_db.push(db(c1.norm()));
        out.c1_phase.push(unit.convert(c1.arg()));
        out.c3_mag_db.push(db(c3.norm()));
        out.c3_phase.push(unit.convert(c3.arg()));
        out.harmonic_ratio_pct.push(100.0 * c3.norm() / c1.norm());
    }
    Ok(out)
}

/// Trapezoidal `∫ ln|S| dω` of the linear and the reset loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodeIntegrals {
    pub linear: f64,
    pub reset: f64,
}

fn bode_integrals(e: &AddonEvaluation) -> Result<BodeIntegrals, CommandError> {
    let c = &e.curves;
    Ok(BodeIntegrals {
        linear: bode_integral(&c.omega, &c.s_lin_mag, None)?,
        reset: bode_integral(&c.omega, &c.s_inf, None)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeReport {
    pub schema_version: u32,
    pub angle_unit: AngleUnit,
    /// Crossover of `C_L·G`, if one exists on the grid.
    pub omega_c: Option<f64>,
    /// Add-on under analysis; `None` analyses `C_L` alone.
    pub design: Option<CglpDesign>,
    pub notches: Vec<NotchPlacement>,
    #[serde(flatten)]
    pub evaluation: AddonEvaluation,
    pub bode_integral: BodeIntegrals,
    pub cglp: Option<CglpResponse>,
}

fn crossover(cfg: &Resolved) -> Option<f64> {
    cfg.omega_c
        .or_else(|| detect_crossover(&cfg.plant, &cfg.c_l, &cfg.grid, cfg.frequency_model))
}

/// Loop under analysis: the explicit add-on when configured, else `C_L` alone.
fn analysis_loop(cfg: &Resolved) -> Result<(LoopConfig, Vec<NotchPlacement>), CommandError> {
    let (lp, notches) = match &cfg.design {
        Some(d) => {
            let notches = cfg.addon.as_ref().map(|a| a.notches.clone()).unwrap_or_default();
            let (lp, _) = assemble_addon_loop(&cfg.plant, &cfg.c_l, &notches, Some(d))?;
            (lp, notches)
        }
        None => (LoopConfig::linear(cfg.c_l.clone(), cfg.plant.clone()), Vec::new()),
    };
    Ok((
        lp.with_n_max(cfg.n_max).with_frequency_model(cfg.frequency_model),
        notches,
    ))
}

pub fn analyze(cfg: &Resolved, unit: AngleUnit) -> Result<AnalyzeReport, CommandError> {
    let (lp, notches) = analysis_loop(cfg)?;
    let evaluation = evaluate_addon(&lp, &cfg.c_l, &notches, &cfg.grid, cfg.omega_res, &cfg.thresholds)?;
    let cglp = cfg
        .design
        .as_ref()
        .map(|d| cglp_response(d, &cfg.grid, unit))
        .transpose()?;
    Ok(AnalyzeReport {
        schema_version: SCHEMA_VERSION,
        angle_unit: unit,
        omega_c: crossover(cfg),
        design: cfg.design.clone(),
        notches,
        bode_integral: bode_integrals(&evaluation)?,
        evaluation,
        cglp,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignReport {
    pub schema_version: u32,
    pub angle_unit: AngleUnit,
    pub omega_c: f64,
    /// Phase the CgLp must supply at `omega_c`.
    pub theta_target: f64,
    /// Largest phase any CgLp with this `omega_l` and `A_rho` reaches at `omega_c`.
    pub theta_max: f64,
    /// `None` when no notch needs compensation and the loop stays linear.
    pub design: Option<CglpDesign>,
    /// `k_c·C_lead·C_N`.
    pub c_g_linear: TfChain,
    pub notches: Vec<NotchPlacement>,
    #[serde(flatten)]
    pub evaluation: AddonEvaluation,
    pub bode_integral: BodeIntegrals,
    pub cglp: Option<CglpResponse>,
}

pub fn addon_request(cfg: &Resolved) -> Result<AddonRequest, CommandError> {
    let addon = cfg
        .addon
        .as_ref()
        .ok_or_else(|| ConfigError::field("addon", "required by the design command"))?;
    let mut req = AddonRequest::new(cfg.plant.clone(), cfg.c_l.clone(), cfg.grid.clone(), cfg.omega_res);
    req.notches = addon.notches.clone();
    req.omega_l = addon.omega_l;
    req.a_rho = addon.a_rho;
    req.c_f = addon.c_f;
    req.omega_c = cfg.omega_c;
    req.thresholds = cfg.thresholds;
    req.n_max = cfg.n_max;
    req.frequency_model = cfg.frequency_model;
    Ok(req)
}

pub fn design(cfg: &Resolved, unit: AngleUnit) -> Result<DesignReport, CommandError> {
    let req = addon_request(cfg)?;
    let d = design_addon(&req)?;
    let evaluation = AddonEvaluation {
        curves: d.curves,
        report: d.report,
        verdict: d.verdict,
    };
    let cglp = d
        .design
        .as_ref()
        .map(|x| cglp_response(x, &cfg.grid, unit))
        .transpose()?;
    Ok(DesignReport {
        schema_version: SCHEMA_VERSION,
        angle_unit: unit,
        omega_c: d.omega_c,
        theta_target: unit.convert(d.theta_target),
        theta_max: unit.convert(theta_max(req.omega_l, req.a_rho, d.omega_c)),
        design: d.design,
        c_g_linear: d.c_g_linear,
        notches: req.notches,
        bode_integral: bode_integrals(&evaluation)?,
        evaluation,
        cglp,
    })
}

/// Largest PSD value above DC.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsdPeak {
    pub omega: f64,
    pub density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub label: String,
    /// One entry per stationary region.
    pub metrics: Vec<RunMetrics>,
    pub resets: usize,
    pub psd_peak: Option<PsdPeak>,
}

/// Add-on relative to baseline, in percent; negative is an improvement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub region: usize,
    pub t_star_baseline: f64,
    pub t_star_addon: f64,
    pub t_star_change_pct: Option<f64>,
    pub rms_baseline: f64,
    pub rms_addon: f64,
    pub rms_change_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    /// Add-on PSD change at the baseline's PSD peak.
    pub psd_peak_change_pct: Option<f64>,
}

/// Predicted versus simulated closed-loop error harmonic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinusoidPoint {
    pub omega: f64,
    pub n: usize,
    pub predicted_mag: f64,
    pub predicted_phase: f64,
    pub simulated_mag: f64,
    pub simulated_phase: f64,
    /// `|predicted − simulated| / |predicted|`.
    pub relative_error: f64,
    /// `||predicted| − |simulated|| / |predicted|`.
    pub magnitude_error: f64,
    pub resets_per_period: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateReport {
    pub schema_version: u32,
    pub angle_unit: AngleUnit,
    pub design: Option<CglpDesign>,
    pub runs: Vec<RunSummary>,
    pub comparison: Option<Comparison>,
    pub sinusoid: Option<Vec<SinusoidPoint>>,
}

/// Report plus the per-run traces and spectra, in `report.runs` order.
#[derive(Debug, Clone)]
pub struct SimulateOutput {
    pub report: SimulateReport,
    pub traces: Vec<(String, SimTrace)>,
    pub spectra: Vec<(String, Psd)>,
}

fn pct_change(base: f64, new: f64) -> Option<f64> {
    (base != 0.0).then(|| 100.0 * (new - base) / base)
}

fn psd_peak(p: &Psd) -> Option<PsdPeak> {
    let lo = p.omega.get(1).copied()?;
    p.peak_in(lo, f64::INFINITY)
        .map(|(omega, density)| PsdPeak { omega, density })
}

/// Add-on loop for simulation: the explicit design, else a fresh design from
/// the `addon` section, else none.
fn addon_loop(cfg: &Resolved) -> Result<Option<(LoopConfig, Option<CglpDesign>)>, CommandError> {
    if cfg.design.is_some() {
        let (lp, _) = analysis_loop(cfg)?;
        return Ok(Some((lp, cfg.design.clone())));
    }
    if cfg.addon.is_some() {
        let d = design_addon(&addon_request(cfg)?)?;
        return Ok(Some((d.loop_config, d.design)));
    }
    Ok(None)
}

fn check_deadline(deadline: Option<Instant>) -> Result<(), CommandError> {
    match deadline {
        Some(d) if Instant::now() >= d => Err(CommandError::Budget { samples: 0 }),
        _ => Ok(()),
    }
}

pub fn simulate(cfg: &Resolved, unit: AngleUnit, deadline: Option<Instant>) -> Result<SimulateOutput, CommandError> {
    if cfg.plant.as_model().is_none() {
        return Err(ConfigError::field("plant", "simulation requires a parametric plant model").into());
    }
    let sim = &cfg.simulation;
    let scenario: Option<Scenario> = sim.scenario.clone().or_else(|| {
        if sim.sinusoid.is_none() {
            cfg.default_scenario.clone()
        } else {
            None
        }
    });
    if scenario.is_none() && sim.sinusoid.is_none() {
        return Err(ConfigError::field("simulation", "needs a scenario or a sinusoid section").into());
    }

    let baseline = LoopConfig::linear(cfg.c_l.clone(), cfg.plant.clone());
    let addon = addon_loop(cfg)?;
    let design = addon.as_ref().and_then(|(_, d)| d.clone());

    let mut loops: Vec<(&str, &LoopConfig)> = vec![("baseline", &baseline)];
    if let Some((lp, _)) = &addon {
        loops.push(("addon", lp));
    }

    let mut runs = Vec::new();
    let mut traces = Vec::new();
    let mut spectra = Vec::new();
    if let Some(sc) = &scenario {
        for (label, lp) in &loops {
            let run = match deadline {
                Some(d) => run_scenario_until(lp, sc, d)?,
                None => run_scenario(lp, sc)?,
            };
            runs.push(RunSummary {
                label: label.to_string(),
                metrics: run.metrics.clone(),
                resets: run.trace.reset_count(),
                psd_peak: psd_peak(&run.psd),
            });
            traces.push((label.to_string(), run.trace));
            spectra.push((label.to_string(), run.psd));
        }
    }

    let comparison = (runs.len() == 2).then(|| {
        let (a, b) = (&runs[0], &runs[1]);
        let rows = a
            .metrics
            .iter()
            .zip(&b.metrics)
            .enumerate()
            .map(|(i, (ma, mb))| ComparisonRow {
                region: i,
                t_star_baseline: ma.t_star,
                t_star_addon: mb.t_star,
                t_star_change_pct: pct_change(ma.t_star, mb.t_star),
                rms_baseline: ma.rms,
                rms_addon: mb.rms,
                rms_change_pct: pct_change(ma.rms, mb.rms),
            })
            .collect();
        let psd_peak_change_pct = a.psd_peak.and_then(|p| pct_change(p.density, spectra[1].1.at(p.omega)));
        Comparison {
            rows,
            psd_peak_change_pct,
        }
    });

    let sinusoid = match &sim.sinusoid {
        None => None,
        Some(spec) => {
            let lp = addon.as_ref().map(|(lp, _)| lp).unwrap_or(&baseline);
            let lp = lp.clone().with_n_max(cfg.n_max);
            let opts = SteadyOptions {
                samples_per_period: spec.samples_per_period,
                ..SteadyOptions::default()
            };
            let mut points = Vec::new();
            for &w in &spec.omegas {
                check_deadline(deadline)?;
                let ss = simulate_sinusoid_closed_loop(&lp, w, &opts)?;
                let h = harmonics_at(&lp, w)?;
                for &n in &spec.harmonics {
                    let p = h.get(n);
                    let m = ss.harmonic(n);
                    points.push(SinusoidPoint {
                        omega: w,
                        n,
                        predicted_mag: p.norm(),
                        predicted_phase: unit.convert(p.arg()),
                        simulated_mag: m.norm(),
                        simulated_phase: unit.convert(m.arg()),
                        relative_error: (p - m).norm() / p.norm(),
                        magnitude_error: (p.norm() - m.norm()).abs() / p.norm(),
                        resets_per_period: ss.reset_indices.len(),
                    });
                }
            }
            Some(points)
        }
    };

    Ok(SimulateOutput {
        report: SimulateReport {
            schema_version: SCHEMA_VERSION,
            angle_unit: unit,
            design,
            runs,
            comparison,
            sinusoid,
        },
        traces,
        spectra,
    })
}
