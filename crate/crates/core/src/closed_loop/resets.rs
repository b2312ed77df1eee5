use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{AnalysisError, LoopConfig};
use crate::sim::{simulate_sinusoid_closed_loop, SteadyOptions};

/// Steady-state reset count of the closed loop under a sinusoidal reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResetCheck {
    pub omega: f64,
    /// `None` when the simulation did not reach a periodic steady state.
    pub resets_per_period: Option<usize>,
}

impl ResetCheck {
    /// `Some(true)` iff exactly two resets per period; `None` if inconclusive.
    pub fn passed(&self) -> Option<bool> {
        self.resets_per_period.map(|n| n == 2)
    }
}

/// Simulates the loop at every grid frequency and counts steady-state resets.
pub fn two_resets_check(lp: &LoopConfig, grid: &[f64], opts: &SteadyOptions) -> Result<Vec<ResetCheck>, AnalysisError> {
    grid.par_iter()
        .map(|&w| match simulate_sinusoid_closed_loop(lp, w, opts) {
            Ok(rec) => Ok(ResetCheck {
                omega: w,
                resets_per_period: Some(rec.reset_indices.len()),
            }),
            Err(crate::sim::SimError::NonConvergent { .. }) => Ok(ResetCheck {
                omega: w,
                resets_per_period: None,
            }),
            Err(e) => Err(e.into()),
        })
        .collect()
}
