use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{
    decaying_disturbance, error_psd, make_trajectory, noise_sequence, settling_metrics, simulate_closed_loop,
    simulate_closed_loop_until, DisturbanceSpec, Exogenous, MoveProfile, Psd, RunMetrics, SimError, SimTrace,
    Trajectory, DEFAULT_DIVERGENCE_BOUND,
};
use crate::closed_loop::LoopConfig;

/// Point-to-point motion with an optional triggered disturbance and sensor noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub profile: MoveProfile,
    #[serde(default)]
    pub disturbance: Option<DisturbanceSpec>,
    #[serde(default)]
    pub noise_std: f64,
    #[serde(default)]
    pub seed: u64,
    /// Welch segment cap for the error PSD.
    #[serde(default)]
    pub psd_segment: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub trajectory: Trajectory,
    pub trace: SimTrace,
    /// One entry per stationary region.
    pub metrics: Vec<RunMetrics>,
    /// Error PSD over the first stationary region.
    pub psd: Psd,
}

pub fn scenario_inputs(sc: &Scenario) -> Result<(Trajectory, Exogenous), SimError> {
    let traj = make_trajectory(&sc.profile)?;
    let d_i = match &sc.disturbance {
        Some(d) => decaying_disturbance(&traj, d),
        None => Vec::new(),
    };
    let d_n = noise_sequence(traj.len(), sc.noise_std, sc.seed)?;
    let ex = Exogenous {
        r: traj.r.clone(),
        d_i,
        d_n,
    };
    Ok((traj, ex))
}

pub fn run_scenario(lp: &LoopConfig, sc: &Scenario) -> Result<ScenarioRun, SimError> {
    let (traj, ex) = scenario_inputs(sc)?;
    let trace = simulate_closed_loop(lp, traj.ts, &ex, DEFAULT_DIVERGENCE_BOUND)?;
    finish(traj, trace, sc)
}

/// [`run_scenario`] with a wall-clock deadline.
pub fn run_scenario_until(lp: &LoopConfig, sc: &Scenario, deadline: Instant) -> Result<ScenarioRun, SimError> {
    let (traj, ex) = scenario_inputs(sc)?;
    let trace = simulate_closed_loop_until(lp, traj.ts, &ex, DEFAULT_DIVERGENCE_BOUND, deadline)?;
    finish(traj, trace, sc)
}

fn finish(traj: Trajectory, trace: SimTrace, sc: &Scenario) -> Result<ScenarioRun, SimError> {
    let metrics = traj
        .regions
        .iter()
        .map(|g| settling_metrics(&trace.e, &trace.reset_flag, traj.ts, g, traj.band))
        .collect::<Result<Vec<_>, _>>()?;
    let first = traj
        .regions
        .first()
        .ok_or_else(|| SimError::Invalid("trajectory has no stationary region".into()))?;
    let k0 = (first.t_r / traj.ts).round() as usize;
    let k1 = ((first.t_e / traj.ts).round() as usize).min(trace.len() - 1);
    let psd = error_psd(&trace.e[k0..=k1], 1.0 / traj.ts, sc.psd_segment)?;
    Ok(ScenarioRun {
        trajectory: traj,
        trace,
        metrics,
        psd,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_loop::Plant;
    use crate::lti::{RationalTf, TfChain};

    #[test]
    fn scenario_runs_and_reports_each_region() {
        let plant = Plant::Model(TfChain::from(RationalTf::new(vec![1.0], vec![1.0, 1.0]).unwrap()));
        let lp = LoopConfig::linear(
            TfChain::from(RationalTf::new(vec![50.0, 1000.0], vec![1.0, 0.0]).unwrap()),
            plant,
        );
        let sc = Scenario {
            profile: MoveProfile {
                distance: 1.0,
                move_time: 0.5,
                hold_time: 2.0,
                pre_time: 0.1,
                backward: true,
                band: 1e-3,
                ts: 1e-3,
            },
            disturbance: None,
            noise_std: 0.0,
            seed: 0,
            psd_segment: None,
        };
        let run = run_scenario(&lp, &sc).unwrap();
        assert_eq!(run.metrics.len(), 2);
        assert!(
            run.metrics.iter().all(|m| m.settled && m.t_star < 1.0),
            "{:?}",
            run.metrics
        );
        assert_eq!(run.trace.len(), run.trajectory.len());
        let past = Instant::now() - std::time::Duration::from_secs(1);
        assert!(matches!(
            run_scenario_until(&lp, &sc, past),
            Err(SimError::DeadlineExceeded { k: 0 })
        ));
    }
}
