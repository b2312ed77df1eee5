use super::{ResetElement, ResetError};

/// Discrete reset surface: fires when the input lands exactly on zero from a
/// nonzero sample, or on a strict sign change.
///
/// A run of zeros counts as a single event, and leaving zero does not fire
/// again, so `[1, 0, -1]` resets once and an all-zero input never resets.
#[inline]
pub fn reset_fires(e_k: f64, e_prev: f64) -> bool {
    (e_k == 0.0 && e_prev != 0.0) || (e_k > 0.0 && e_prev < 0.0) || (e_k < 0.0 && e_prev > 0.0)
}

/// Output of one discrete reset-element update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResetStep {
    pub u: f64,
    pub reset: bool,
}

/// Runtime state of a Tustin-discretized first-order reset element.
///
/// The base linear system is discretized with the feedthrough removed; `D_r`
/// is added back in parallel at the output.
#[derive(Debug, Clone)]
pub struct DiscreteResetState {
    x: f64,
    e_prev: f64,
    ad: f64,
    bd: f64,
    cd: f64,
    dd: f64,
    d_r: f64,
    a_rho: f64,
    ts: f64,
    resets: u64,
}

/// Builds the discrete realization; only first-order elements are supported.
pub fn discretize_reset(el: &ResetElement, ts: f64) -> Result<DiscreteResetState, ResetError> {
    if el.order() != 1 {
        return Err(ResetError::UnsupportedOrder(el.order()));
    }
    if !(ts > 0.0 && ts.is_finite()) {
        return Err(ResetError::Invalid(format!("sample time must be > 0, got {ts}")));
    }
    let a = el.a_r()[(0, 0)];
    let b = el.b_r()[0];
    let c = el.c_r()[0];
    let m = 1.0 / (1.0 - a * ts / 2.0);
    if !m.is_finite() {
        return Err(ResetError::Invalid(
            "sample time places the pole on the bilinear singularity".into(),
        ));
    }
    Ok(DiscreteResetState {
        x: 0.0,
        e_prev: 0.0,
        ad: (1.0 + a * ts / 2.0) * m,
        bd: b * ts * m,
        cd: c * m,
        dd: c * m * b * ts / 2.0,
        d_r: el.d_r(),
        a_rho: el.a_rho()[0],
        ts,
        resets: 0,
    })
}

impl DiscreteResetState {
    pub fn ts(&self) -> f64 {
        self.ts
    }

    pub fn state(&self) -> f64 {
        self.x
    }

    pub fn reset_count(&self) -> u64 {
        self.resets
    }

    /// Discrete base-linear coefficients `(Ã, B̃, C̃, D̃)` without `D_r`.
    pub fn coefficients(&self) -> (f64, f64, f64, f64) {
        (self.ad, self.bd, self.cd, self.dd)
    }

    pub fn with_initial_state(mut self, x0: f64) -> Self {
        self.x = x0;
        self
    }

    pub fn clear(&mut self) {
        self.x = 0.0;
        self.e_prev = 0.0;
        self.resets = 0;
    }

    pub fn step(&mut self, e: f64) -> Result<ResetStep, ResetError> {
        if !e.is_finite() {
            return Err(ResetError::NonFinite);
        }
        let reset = reset_fires(e, self.e_prev);
        let x_next = self.ad * self.x + self.bd * e;
        let u_lin = self.cd * self.x + self.dd * e;
        let (x_next, u_tilde) = if reset {
            self.resets += 1;
            (self.a_rho * x_next, self.a_rho * u_lin)
        } else {
            (x_next, u_lin)
        };
        self.x = x_next;
        self.e_prev = e;
        Ok(ResetStep {
            u: u_tilde + self.d_r * e,
            reset,
        })
    }

    /// Linear branch only; used as the reference for the identity-reset case.
    pub fn step_linear(&mut self, e: f64) -> f64 {
        let u = self.cd * self.x + self.dd * e;
        self.x = self.ad * self.x + self.bd * e;
        self.e_prev = e;
        u + self.d_r * e
    }
}

/// Standalone form of [`DiscreteResetState::step`].
pub fn step_discrete(state: &mut DiscreteResetState, e: f64) -> Result<ResetStep, ResetError> {
    state.step(e)
}
