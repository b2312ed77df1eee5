use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::SimError;

/// Point-to-point move: rest, minimum-jerk move, hold, and optionally the
/// move back followed by a second hold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoveProfile {
    pub distance: f64,
    /// Duration of each move, seconds.
    pub move_time: f64,
    /// Duration of each stationary hold, seconds.
    pub hold_time: f64,
    /// Rest before the first move, seconds.
    #[serde(default)]
    pub pre_time: f64,
    #[serde(default)]
    pub backward: bool,
    /// Settling band `B_x` in position units.
    pub band: f64,
    pub ts: f64,
}

/// Hold interval `[t_r, t_e]` after a move.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryRegion {
    pub t_r: f64,
    pub t_e: f64,
    /// Reference level during the hold.
    pub level: f64,
    /// +1 after a forward move, −1 after a backward move.
    pub direction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub ts: f64,
    pub r: Vec<f64>,
    pub regions: Vec<StationaryRegion>,
    pub band: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.r.len()).map(|k| k as f64 * self.ts).collect()
    }

    /// Same timing with the reference scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            r: self.r.iter().map(|v| v * factor).collect(),
            regions: self
                .regions
                .iter()
                .map(|g| StationaryRegion {
                    level: g.level * factor,
                    ..*g
                })
                .collect(),
            ..self.clone()
        }
    }
}

/// Minimum-jerk position fraction `10τ³ − 15τ⁴ + 6τ⁵`.
fn min_jerk(tau: f64) -> f64 {
    let t = tau.clamp(0.0, 1.0);
    t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
}

pub fn make_trajectory(p: &MoveProfile) -> Result<Trajectory, SimError> {
    if !(p.ts > 0.0) || !(p.move_time > 0.0) || !(p.hold_time > 0.0) || p.pre_time < 0.0 {
        return Err(SimError::Invalid(
            "move and hold durations and the sample time must be positive".into(),
        ));
    }
    if !p.distance.is_finite() || !(p.band > 0.0) {
        return Err(SimError::Invalid("distance must be finite and band positive".into()));
    }
    let mut segments = vec![
        (p.pre_time, 0.0, 0.0),
        (p.move_time, 0.0, p.distance),
        (p.hold_time, p.distance, p.distance),
    ];
    if p.backward {
        segments.push((p.move_time, p.distance, 0.0));
        segments.push((p.hold_time, 0.0, 0.0));
    }
    let total: f64 = segments.iter().map(|s| s.0).sum();
    let n = (total / p.ts).round() as usize + 1;
    let mut r = vec![0.0; n];
    let mut regions = Vec::new();
    let mut start = 0.0;
    for (i, &(dur, from, to)) in segments.iter().enumerate() {
        let end = start + dur;
        let is_move = i % 2 == 1;
        let k0 = (start / p.ts).round() as usize;
        let k1 = ((end / p.ts).round() as usize).min(n - 1);
        for (k, v) in r.iter_mut().enumerate().take(k1 + 1).skip(k0) {
            let t = k as f64 * p.ts;
            *v = if is_move {
                from + (to - from) * min_jerk((t - start) / dur)
            } else {
                to
            };
        }
        if !is_move && i > 0 {
            regions.push(StationaryRegion {
                t_r: start,
                t_e: end,
                level: to,
                direction: if i == 2 { 1.0 } else { -1.0 },
            });
        }
        start = end;
    }
    Ok(Trajectory {
        ts: p.ts,
        r,
        regions,
        band: p.band,
    })
}

/// Plant-input disturbance `A·e^{−στ}·sin(ωτ)` started at each motion end
/// (`τ = t − t_r`), signed by the move direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceSpec {
    pub amplitude: f64,
    pub omega: f64,
    /// Decay rate `σ`, 1/s.
    pub decay: f64,
}

pub fn decaying_disturbance(traj: &Trajectory, spec: &DisturbanceSpec) -> Vec<f64> {
    let mut d = vec![0.0; traj.len()];
    for g in &traj.regions {
        let k0 = (g.t_r / traj.ts).round() as usize;
        for (k, v) in d.iter_mut().enumerate().skip(k0) {
            let tau = (k - k0) as f64 * traj.ts;
            *v += g.direction * spec.amplitude * (-spec.decay * tau).exp() * (spec.omega * tau).sin();
        }
    }
    d
}

/// Reproducible Gaussian sequence for measurement noise.
pub fn noise_sequence(n: usize, std_dev: f64, seed: u64) -> Result<Vec<f64>, SimError> {
    if std_dev == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let dist = Normal::new(0.0, std_dev).map_err(|e| SimError::Invalid(format!("noise standard deviation: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n).map(|_| dist.sample(&mut rng)).collect())
}
