//! Reset elements: continuous definition, base linear system, discrete-time
//! realization with the strict zero-crossing surface, and a steady-state
//! sinusoidal simulator used as the describing-function oracle.

mod discrete;
mod element;
mod steady;

use thiserror::Error;

pub use discrete::{discretize_reset, reset_fires, step_discrete, DiscreteResetState, ResetStep};
pub use element::{bls_tf, ResetElement};
pub use steady::{simulate_sinusoid_steady, SteadyRecord, MAX_PERIODS, MIN_SAMPLES_PER_PERIOD, STEADY_TOLERANCE};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ResetError {
    #[error("invalid reset element: {0}")]
    Invalid(String),
    #[error("discrete realization supports first-order elements only (got order {0})")]
    UnsupportedOrder(usize),
    #[error("non-finite input sample")]
    NonFinite,
    #[error("no periodic steady state after {periods} periods (relative change {residual:.3e})")]
    NonConvergent { periods: usize, residual: f64 },
}
