use std::f64::consts::PI;
use std::fmt::Write as _;
use std::time::Instant;

use num_complex::Complex64;

use super::SimError;
use crate::closed_loop::{LoopConfig, Plant};
use crate::lti::DiscreteChain;
use crate::reset::{discretize_reset, DiscreteResetState};
use crate::signal::{relative_rms_diff, sine_harmonic};

/// Default bound on `|y|` beyond which a run is declared divergent.
pub const DEFAULT_DIVERGENCE_BOUND: f64 = 1e9;

/// Signals produced by one loop update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopSample {
    pub e: f64,
    pub e_r: f64,
    pub u_r: f64,
    pub u: f64,
    pub y: f64,
    pub reset: bool,
}

/// Sampled loop `e → C_1 → R → C_2 → G` with every LTI block Tustin-discretized.
///
/// The loop is closed through the previous plant output: `e_k = r_k − (y_{k−1} + d_n,k)`,
/// so the sampled loop carries one sample of delay.
#[derive(Debug, Clone)]
pub struct DiscreteLoop {
    c1: DiscreteChain,
    reset: DiscreteResetState,
    c2: DiscreteChain,
    plant: DiscreteChain,
    ts: f64,
    y_prev: f64,
    bound: f64,
    k: usize,
    linear: bool,
}

impl DiscreteLoop {
    pub fn new(lp: &LoopConfig, ts: f64) -> Result<Self, SimError> {
        let plant = match &lp.plant {
            Plant::Model(m) => m,
            Plant::Frf(_) => return Err(SimError::FrfPlant),
        };
        if !(ts > 0.0 && ts.is_finite()) {
            return Err(SimError::Invalid(format!("sample time must be positive, got {ts}")));
        }
        Ok(Self {
            c1: DiscreteChain::new(&lp.c1, ts)?,
            reset: discretize_reset(&lp.reset, ts)?,
            c2: DiscreteChain::new(&lp.c2, ts)?,
            plant: DiscreteChain::new(plant, ts)?,
            ts,
            y_prev: 0.0,
            bound: DEFAULT_DIVERGENCE_BOUND,
            k: 0,
            linear: false,
        })
    }

    pub fn with_bound(mut self, bound: f64) -> Self {
        self.bound = bound;
        self
    }

    /// Bypasses the reset surface: the reset element runs as its base linear system.
    pub fn force_linear(mut self) -> Self {
        self.linear = true;
        self
    }

    pub fn ts(&self) -> f64 {
        self.ts
    }

    pub fn step(&mut self, r: f64, d_i: f64, d_n: f64) -> Result<LoopSample, SimError> {
        let e = r - (self.y_prev + d_n);
        let e_r = self.c1.step(e);
        let (u_r, reset) = if self.linear {
            (self.reset.step_linear(e_r), false)
        } else {
            let s = self.reset.step(e_r)?;
            (s.u, s.reset)
        };
        let u = self.c2.step(u_r);
        let y = self.plant.step(u + d_i);
        if !(y.abs() <= self.bound) {
            return Err(SimError::Diverged {
                k: self.k,
                value: y.abs(),
            });
        }
        self.y_prev = y;
        self.k += 1;
        Ok(LoopSample {
            e,
            e_r,
            u_r,
            u,
            y,
            reset,
        })
    }

    /// Returns every block to zero state.
    pub fn clear(&mut self) {
        self.c1.reset();
        self.reset.clear();
        self.c2.reset();
        self.plant.reset();
        self.y_prev = 0.0;
        self.k = 0;
    }
}

/// Exogenous inputs: reference, plant-input disturbance and measurement noise.
/// Empty disturbance vectors are read as zero.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Exogenous {
    pub r: Vec<f64>,
    pub d_i: Vec<f64>,
    pub d_n: Vec<f64>,
}

impl Exogenous {
    pub fn reference(r: Vec<f64>) -> Self {
        Self { r, ..Self::default() }
    }
}

/// Sampled signals of a closed-loop run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub ts: f64,
    pub t: Vec<f64>,
    pub r: Vec<f64>,
    pub e: Vec<f64>,
    pub u: Vec<f64>,
    pub y: Vec<f64>,
    pub e_r: Vec<f64>,
    pub u_r: Vec<f64>,
    pub reset_flag: Vec<bool>,
}

impl SimTrace {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn reset_count(&self) -> usize {
        self.reset_flag.iter().filter(|&&f| f).count()
    }

    /// CSV `t,r,e,u,y,reset_flag`.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("t,r,e,u,y,reset_flag\n");
        for k in 0..self.len() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                self.t[k],
                self.r[k],
                self.e[k],
                self.u[k],
                self.y[k],
                u8::from(self.reset_flag[k])
            );
        }
        out
    }

    /// CSV `t,e_r,u_r,reset_flag` for the reset element alone.
    pub fn reset_csv_string(&self) -> String {
        let mut out = String::from("t,e_r,u_r,reset_flag\n");
        for k in 0..self.len() {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                self.t[k],
                self.e_r[k],
                self.u_r[k],
                u8::from(self.reset_flag[k])
            );
        }
        out
    }
}

fn input_at(v: &[f64], k: usize) -> f64 {
    v.get(k).copied().unwrap_or(0.0)
}

/// Runs the loop from zero state over the length of `ex.r`.
pub fn simulate_closed_loop(lp: &LoopConfig, ts: f64, ex: &Exogenous, bound: f64) -> Result<SimTrace, SimError> {
    let mut sim = DiscreteLoop::new(lp, ts)?.with_bound(bound);
    run(&mut sim, ex, None)
}

/// As [`simulate_closed_loop`], but gives up with [`SimError::DeadlineExceeded`]
/// once the wall clock passes `deadline`.
pub fn simulate_closed_loop_until(
    lp: &LoopConfig,
    ts: f64,
    ex: &Exogenous,
    bound: f64,
    deadline: Instant,
) -> Result<SimTrace, SimError> {
    let mut sim = DiscreteLoop::new(lp, ts)?.with_bound(bound);
    run(&mut sim, ex, Some(deadline))
}

pub(crate) fn run(sim: &mut DiscreteLoop, ex: &Exogenous, deadline: Option<Instant>) -> Result<SimTrace, SimError> {
    let n = ex.r.len();
    let mut tr = SimTrace {
        ts: sim.ts,
        t: Vec::with_capacity(n),
        r: Vec::with_capacity(n),
        e: Vec::with_capacity(n),
        u: Vec::with_capacity(n),
        y: Vec::with_capacity(n),
        e_r: Vec::with_capacity(n),
        u_r: Vec::with_capacity(n),
        reset_flag: Vec::with_capacity(n),
    };
    for k in 0..n {
        if k % 4096 == 0 && deadline.is_some_and(|d| Instant::now() > d) {
            return Err(SimError::DeadlineExceeded { k });
        }
        let s = sim.step(ex.r[k], input_at(&ex.d_i, k), input_at(&ex.d_n, k))?;
        tr.t.push(k as f64 * sim.ts);
        tr.r.push(ex.r[k]);
        tr.e.push(s.e);
        tr.u.push(s.u);
        tr.y.push(s.y);
        tr.e_r.push(s.e_r);
        tr.u_r.push(s.u_r);
        tr.reset_flag.push(s.reset);
    }
    Ok(tr)
}

/// Settings for periodic steady-state runs under sinusoidal excitation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyOptions {
    pub samples_per_period: usize,
    pub min_periods: usize,
    pub max_periods: usize,
    /// Relative RMS change between consecutive periods accepted as steady.
    pub tolerance: f64,
    pub r0: f64,
    pub bound: f64,
}

impl Default for SteadyOptions {
    fn default() -> Self {
        Self {
            samples_per_period: 2000,
            min_periods: 20,
            max_periods: 4000,
            tolerance: 1e-6,
            r0: 1.0,
            bound: DEFAULT_DIVERGENCE_BOUND,
        }
    }
}

impl SteadyOptions {
    fn validate(&self, omega: f64) -> Result<(), SimError> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(SimError::Invalid(format!("frequency must be positive, got {omega}")));
        }
        if self.samples_per_period < 16 || self.min_periods < 2 || self.max_periods < self.min_periods {
            return Err(SimError::Invalid("inconsistent steady-state options".into()));
        }
        if !(self.r0 > 0.0) {
            return Err(SimError::Invalid("reference amplitude must be positive".into()));
        }
        Ok(())
    }

    fn ts(&self, omega: f64) -> f64 {
        2.0 * PI / omega / self.samples_per_period as f64
    }
}

/// Final period of the closed loop driven by `r = r0·sin(ωt)`.
#[derive(Debug, Clone)]
pub struct ClosedLoopSteady {
    pub omega: f64,
    pub ts: f64,
    pub r0: f64,
    pub error: Vec<f64>,
    pub e_r: Vec<f64>,
    pub reset_indices: Vec<usize>,
    pub periods_run: usize,
}

impl ClosedLoopSteady {
    /// Error harmonic `n` per unit reference amplitude; comparable to `S_n(ω)`.
    pub fn harmonic(&self, n: usize) -> Complex64 {
        sine_harmonic(&self.error, n) / self.r0
    }
}

struct PeriodRun {
    primary: Vec<f64>,
    secondary: Vec<f64>,
    resets: Vec<usize>,
    periods: usize,
}

fn run_until_periodic<F>(opts: &SteadyOptions, mut step: F) -> Result<PeriodRun, SimError>
where
    F: FnMut(f64) -> Result<(f64, f64, bool), SimError>,
{
    let n = opts.samples_per_period;
    let input: Vec<f64> = (0..n)
        .map(|k| opts.r0 * (2.0 * PI * k as f64 / n as f64).sin())
        .collect();
    let mut prev = vec![0.0; n];
    let mut cur = vec![0.0; n];
    let mut sec = vec![0.0; n];
    let mut resets = Vec::new();
    let mut residual = f64::INFINITY;
    for p in 0..opts.max_periods {
        resets.clear();
        for (k, &r) in input.iter().enumerate() {
            let (a, b, reset) = step(r)?;
            cur[k] = a;
            sec[k] = b;
            if reset {
                resets.push(k);
            }
        }
        if p > 0 {
            residual = relative_rms_diff(&cur, &prev);
        }
        if p + 1 >= opts.min_periods && residual < opts.tolerance {
            return Ok(PeriodRun {
                primary: cur,
                secondary: sec,
                resets,
                periods: p + 1,
            });
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Err(SimError::NonConvergent {
        periods: opts.max_periods,
        residual,
    })
}

/// Simulates the closed loop under a sinusoidal reference until the error is
/// periodic. The sample time is `2π/(ω·samples_per_period)`.
pub fn simulate_sinusoid_closed_loop(
    lp: &LoopConfig,
    omega: f64,
    opts: &SteadyOptions,
) -> Result<ClosedLoopSteady, SimError> {
    opts.validate(omega)?;
    let ts = opts.ts(omega);
    let mut sim = DiscreteLoop::new(lp, ts)?.with_bound(opts.bound);
    let out = run_until_periodic(opts, |r| {
        let s = sim.step(r, 0.0, 0.0)?;
        Ok((s.e, s.e_r, s.reset))
    })?;
    Ok(ClosedLoopSteady {
        omega,
        ts,
        r0: opts.r0,
        error: out.primary,
        e_r: out.secondary,
        reset_indices: out.resets,
        periods_run: out.periods,
    })
}

/// Final period of the open chain `C_1 → R → C_2 → G` driven by `r0·sin(ωt)`.
#[derive(Debug, Clone)]
pub struct OpenChainSteady {
    pub omega: f64,
    pub ts: f64,
    pub r0: f64,
    pub output: Vec<f64>,
    pub reset_indices: Vec<usize>,
    pub periods_run: usize,
}

impl OpenChainSteady {
    /// Output harmonic `n` per unit input amplitude; comparable to `L_n(ω)`.
    pub fn harmonic(&self, n: usize) -> Complex64 {
        sine_harmonic(&self.output, n) / self.r0
    }
}

/// Drives the open chain with a sinusoid until its output is periodic. The
/// plant must be asymptotically stable for a periodic output to exist.
pub fn simulate_open_chain(lp: &LoopConfig, omega: f64, opts: &SteadyOptions) -> Result<OpenChainSteady, SimError> {
    opts.validate(omega)?;
    let plant = lp.plant.as_model().ok_or(SimError::FrfPlant)?;
    let ts = opts.ts(omega);
    let mut c1 = DiscreteChain::new(&lp.c1, ts)?;
    let mut reset = discretize_reset(&lp.reset, ts)?;
    let mut c2 = DiscreteChain::new(&lp.c2, ts)?;
    let mut g = DiscreteChain::new(plant, ts)?;
    let out = run_until_periodic(opts, |e| {
        let s = reset.step(c1.step(e))?;
        let y = g.step(c2.step(s.u));
        if !(y.abs() <= opts.bound) {
            return Err(SimError::Diverged { k: 0, value: y.abs() });
        }
        Ok((y, s.u, s.reset))
    })?;
    Ok(OpenChainSteady {
        omega,
        ts,
        r0: opts.r0,
        output: out.primary,
        reset_indices: out.resets,
        periods_run: out.periods,
    })
}
