//! Project configuration: where the plant comes from, the baseline controller,
//! the analysis grid, thresholds, and the optional add-on and simulation
//! settings.

use std::path::{Path, PathBuf};

use resetloop_core::cglp::CglpDesign;
use resetloop_core::closed_loop::{FrequencyModel, NotchPlacement, Plant, Thresholds, DEFAULT_N_MAX};
use resetloop_core::fixtures::{self, TwoMassParams};
use resetloop_core::lti::{log_grid, FrfTable, LtiError, TfChain};
use resetloop_core::sim::Scenario;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Machine-readable validation failure for one field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldError {
    /// Dotted path into the configuration, e.g. `addon.omega_l`.
    pub field: String,
    pub message: String,
}

impl FieldError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid configuration: {}", summarize(.0))]
    Fields(Vec<FieldError>),
    #[error("{path}: {source}")]
    Frf { path: String, source: LtiError },
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
}

fn summarize(errs: &[FieldError]) -> String {
    errs.iter()
        .map(|e| format!("{}: {}", e.field, e.message))
        .collect::<Vec<_>>()
        .join("; ")
}

impl ConfigError {
    pub fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Fields(vec![FieldError::new(field, message)])
    }

    pub fn field_errors(&self) -> Vec<FieldError> {
        match self {
            ConfigError::Fields(v) => v.clone(),
            ConfigError::Frf { source, .. } => vec![FieldError::new("plant.frf", source.to_string())],
            ConfigError::Io { msg, .. } => vec![FieldError::new("plant.frf", msg.clone())],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlantSource {
    /// Built-in model; `two_mass` is the only id.
    Synthetic {
        id: String,
        #[serde(default)]
        params: Option<TwoMassParams>,
    },
    /// Measured FRF CSV, relative to the configuration file.
    Frf { path: PathBuf },
    /// Parametric model as a transfer-function chain.
    Model(TfChain),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub omega_min: f64,
    pub omega_max: f64,
    pub points_per_decade: usize,
}

/// Inputs of the backward design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AddonParams {
    pub notches: Vec<NotchPlacement>,
    pub omega_l: f64,
    #[serde(default)]
    pub a_rho: f64,
    #[serde(default = "one")]
    pub c_f: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SinusoidSpec {
    pub omegas: Vec<f64>,
    #[serde(default = "default_spp")]
    pub samples_per_period: usize,
    #[serde(default = "default_harmonics")]
    pub harmonics: Vec<usize>,
}

fn default_spp() -> usize {
    2000
}

fn default_harmonics() -> Vec<usize> {
    vec![1, 3]
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    /// Point-to-point run; the synthetic plant has a default.
    #[serde(default)]
    pub scenario: Option<Scenario>,
    /// Steady-state runs under sinusoidal references.
    #[serde(default)]
    pub sinusoid: Option<SinusoidSpec>,
    /// Wall-clock budget per request, milliseconds.
    #[serde(default)]
    pub budget_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectConfig {
    pub plant: PlantSource,
    /// Baseline controller `C_L`; required unless the plant is synthetic.
    #[serde(default)]
    pub controller: Option<TfChain>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    /// Split frequency between the `M_s` and `M_r` regions.
    #[serde(default)]
    pub omega_res: Option<f64>,
    /// Crossover of `C_L·G`; detected on the grid when absent.
    #[serde(default)]
    pub omega_c: Option<f64>,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub frequency_model: FrequencyModel,
    #[serde(default)]
    pub addon: Option<AddonParams>,
    /// Fixed add-on used by `analyze` and `simulate` instead of a new design.
    #[serde(default)]
    pub design: Option<CglpDesign>,
    #[serde(default)]
    pub simulation: Option<SimulationSpec>,
}

fn default_n_max() -> usize {
    DEFAULT_N_MAX
}

impl ProjectConfig {
    pub fn synthetic() -> Self {
        Self {
            plant: PlantSource::Synthetic {
                id: "two_mass".into(),
                params: None,
            },
            controller: None,
            grid: None,
            n_max: DEFAULT_N_MAX,
            omega_res: None,
            omega_c: None,
            thresholds: Thresholds::default(),
            frequency_model: FrequencyModel::Continuous,
            addon: None,
            design: None,
            simulation: None,
        }
    }

    /// Parses JSON, reporting the path of the offending field on failure.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let field = if path == "." { String::new() } else { path };
            ConfigError::field(field, e.inner().to_string())
        })
    }

    pub fn from_value(v: serde_json::Value) -> Result<Self, ConfigError> {
        serde_path_to_error::deserialize(v).map_err(|e| {
            let path = e.path().to_string();
            let field = if path == "." { String::new() } else { path };
            ConfigError::field(field, e.inner().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        Self::from_json(&text)
    }
}

/// Configuration with the plant loaded and every default filled in.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub plant: Plant,
    pub c_l: TfChain,
    pub grid: Vec<f64>,
    pub n_max: usize,
    pub omega_res: f64,
    pub omega_c: Option<f64>,
    pub thresholds: Thresholds,
    pub frequency_model: FrequencyModel,
    pub addon: Option<AddonParams>,
    pub design: Option<CglpDesign>,
    pub simulation: SimulationSpec,
    /// Present for the synthetic plant only.
    pub default_scenario: Option<Scenario>,
}

fn finite_positive(errs: &mut Vec<FieldError>, field: &str, v: f64) {
    if !(v.is_finite() && v > 0.0) {
        errs.push(FieldError::new(field, format!("must be finite and positive, got {v}")));
    }
}

/// Loads the plant and checks every field; FRF paths are taken relative to `base`.
pub fn resolve(cfg: &ProjectConfig, base: &Path) -> Result<Resolved, ConfigError> {
    let mut errs = Vec::new();
    let mut reference = None;
    let plant = match &cfg.plant {
        PlantSource::Synthetic { id, params } => {
            if id != "two_mass" {
                return Err(ConfigError::field(
                    "plant.synthetic.id",
                    format!("unknown synthetic plant `{id}`"),
                ));
            }
            let mut r = fixtures::reference();
            if let Some(p) = params {
                r.params = *p;
                r.plant = p.plant();
                r.c_l = fixtures::baseline_controller(&r.plant, r.omega_c);
            }
            let plant = Plant::Model(r.plant.clone());
            reference = Some(r);
            plant
        }
        PlantSource::Frf { path } => {
            let full = if path.is_absolute() {
                path.clone()
            } else {
                base.join(path)
            };
            let table = FrfTable::from_csv_path(&full).map_err(|source| ConfigError::Frf {
                path: full.display().to_string(),
                source,
            })?;
            Plant::Frf(table)
        }
        PlantSource::Model(m) => {
            if !m.is_proper() {
                errs.push(FieldError::new("plant.model", "plant model must be proper"));
            }
            Plant::Model(m.clone())
        }
    };

    let c_l = match (&cfg.controller, &reference) {
        (Some(c), _) => c.clone(),
        (None, Some(r)) => r.c_l.clone(),
        (None, None) => {
            errs.push(FieldError::new("controller", "required for non-synthetic plants"));
            TfChain::unity()
        }
    };

    let grid = match (&cfg.grid, &reference) {
        (Some(g), _) => {
            let ok = g.omega_min.is_finite()
                && g.omega_min > 0.0
                && g.omega_max.is_finite()
                && g.omega_max > g.omega_min
                && g.points_per_decade > 0;
            if ok {
                log_grid(g.omega_min, g.omega_max, g.points_per_decade)
            } else {
                errs.push(FieldError::new(
                    "grid",
                    "needs 0 < omega_min < omega_max and points_per_decade >= 1",
                ));
                Vec::new()
            }
        }
        (None, Some(r)) => r.grid(),
        (None, None) => {
            let (lo, hi) = plant.range();
            if lo.is_finite() && hi.is_finite() && lo > 0.0 && hi > lo {
                log_grid(lo, hi, 40)
            } else {
                errs.push(FieldError::new("grid", "required for parametric plants"));
                Vec::new()
            }
        }
    };

    if cfg.n_max == 0 {
        errs.push(FieldError::new("n_max", "must be at least 1"));
    }
    let t = &cfg.thresholds;
    finite_positive(&mut errs, "thresholds.m_s_db", t.m_s_db);
    finite_positive(&mut errs, "thresholds.m_r_db", t.m_r_db);
    if !t.delta_s_pct.is_finite() {
        errs.push(FieldError::new("thresholds.delta_s_pct", "must be finite"));
    }

    let omega_res = match (cfg.omega_res, &reference) {
        (Some(w), _) => w,
        (None, Some(r)) => r.omega_res,
        (None, None) => {
            errs.push(FieldError::new("omega_res", "required for non-synthetic plants"));
            f64::NAN
        }
    };
    if let (Some(&lo), Some(&hi)) = (grid.first(), grid.last()) {
        if !(omega_res > lo && omega_res <= hi) {
            errs.push(FieldError::new(
                "omega_res",
                format!("must lie inside the analysis grid ({lo}, {hi}]"),
            ));
        }
    }
    if let Some(w) = cfg.omega_c {
        finite_positive(&mut errs, "omega_c", w);
    }
    if let FrequencyModel::Discrete { ts } = cfg.frequency_model {
        finite_positive(&mut errs, "frequency_model.ts", ts);
    }

    if let Some(a) = &cfg.addon {
        if a.notches.is_empty() {
            errs.push(FieldError::new("addon.notches", "at least one notch is required"));
        }
        for (i, n) in a.notches.iter().enumerate() {
            if let Err(e) = n.spec.validate() {
                errs.push(FieldError::new(format!("addon.notches[{i}]"), e.to_string()));
            }
        }
        finite_positive(&mut errs, "addon.omega_l", a.omega_l);
        if !(a.a_rho > -1.0 && a.a_rho < 1.0) {
            errs.push(FieldError::new(
                "addon.a_rho",
                format!("must lie in (-1, 1), got {}", a.a_rho),
            ));
        }
        finite_positive(&mut errs, "addon.c_f", a.c_f);
    }

    let simulation = cfg.simulation.clone().unwrap_or_default();
    if let Some(s) = &simulation.sinusoid {
        if s.omegas.is_empty() {
            errs.push(FieldError::new(
                "simulation.sinusoid.omegas",
                "at least one frequency is required",
            ));
        }
        for (i, &w) in s.omegas.iter().enumerate() {
            finite_positive(&mut errs, &format!("simulation.sinusoid.omegas[{i}]"), w);
        }
        if s.samples_per_period < 16 {
            errs.push(FieldError::new(
                "simulation.sinusoid.samples_per_period",
                "must be at least 16",
            ));
        }
        if s.harmonics.contains(&0) {
            errs.push(FieldError::new(
                "simulation.sinusoid.harmonics",
                "harmonic indices start at 1",
            ));
        }
    }

    if !errs.is_empty() {
        return Err(ConfigError::Fields(errs));
    }
    Ok(Resolved {
        plant,
        c_l,
        grid,
        n_max: cfg.n_max,
        omega_res,
        omega_c: cfg.omega_c,
        thresholds: cfg.thresholds,
        frequency_model: cfg.frequency_model,
        addon: cfg.addon.clone(),
        design: cfg.design.clone(),
        simulation,
        default_scenario: reference.as_ref().map(|r| r.scenario()),
    })
}
