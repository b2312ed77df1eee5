//! Discrete-time closed-loop simulation of reset control loops, reference
//! trajectories, disturbances, and time-domain metrics.

mod engine;
mod metrics;
mod scenario;
mod trajectory;

use thiserror::Error;

use crate::lti::LtiError;
use crate::reset::ResetError;

pub use engine::{
    simulate_closed_loop, simulate_closed_loop_until, simulate_open_chain, simulate_sinusoid_closed_loop,
    ClosedLoopSteady, DiscreteLoop, Exogenous, LoopSample, OpenChainSteady, SimTrace, SteadyOptions,
    DEFAULT_DIVERGENCE_BOUND,
};
pub use metrics::{error_psd, settling_metrics, Psd, RunMetrics, PSD_MIN_SAMPLES, PSD_SEGMENT_CAP};
pub use scenario::{run_scenario, run_scenario_until, scenario_inputs, Scenario, ScenarioRun};
pub use trajectory::{
    decaying_disturbance, make_trajectory, noise_sequence, DisturbanceSpec, MoveProfile, StationaryRegion, Trajectory,
};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SimError {
    #[error("invalid simulation input: {0}")]
    Invalid(String),
    #[error("simulation requires a parametric plant model, not a measured FRF")]
    FrfPlant,
    #[error("simulation diverged at sample {k} (|y| = {value:e})")]
    Diverged { k: usize, value: f64 },
    #[error("no periodic steady state after {periods} periods (relative change {residual:.3e})")]
    NonConvergent { periods: usize, residual: f64 },
    #[error("wall-clock budget exhausted after {k} samples")]
    DeadlineExceeded { k: usize },
    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error(transparent)]
    Reset(#[from] ResetError),
    #[error(transparent)]
    Lti(#[from] LtiError),
}
