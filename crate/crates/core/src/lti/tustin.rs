use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::tf::{polymul, polyval};
use super::{LtiError, RationalTf, TfChain};

/// Discrete transfer function in descending powers of `z`, `a[0] == 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteTf {
    pub b: Vec<f64>,
    pub a: Vec<f64>,
    pub ts: f64,
}

impl DiscreteTf {
    pub fn eval_z(&self, z: Complex64) -> Complex64 {
        // Both polynomials share the same length after discretization.
        polyval(&self.b, z) / polyval(&self.a, z)
    }

    /// Frequency response at `z = e^{jωT}`.
    pub fn eval(&self, omega: f64) -> Complex64 {
        self.eval_z(Complex64::from_polar(1.0, omega * self.ts))
    }
}

fn binomial_poly(sign: f64, power: usize) -> Vec<f64> {
    // (z + sign)^power in descending powers.
    (0..power).fold(vec![1.0], |acc, _| polymul(&acc, &[1.0, sign]))
}

/// Bilinear substitution `s ← (2/T)(z−1)/(z+1)`.
pub fn tustin_discretize(tf: &RationalTf, ts: f64) -> Result<DiscreteTf, LtiError> {
    if !(ts > 0.0 && ts.is_finite()) {
        return Err(LtiError::Invalid(format!("sample time must be > 0, got {ts}")));
    }
    if !tf.is_proper() {
        return Err(LtiError::Invalid(format!(
            "improper transfer function (num degree {} > den degree {})",
            tf.num_degree(),
            tf.den_degree()
        )));
    }
    let n = tf.den_degree();
    let c = 2.0 / ts;
    let map = |coeffs: &[f64]| -> Vec<f64> {
        let deg = coeffs.len() - 1;
        let mut out = vec![0.0; n + 1];
        for (i, &coef) in coeffs.iter().enumerate() {
            if coef == 0.0 {
                continue;
            }
            let k = deg - i; // power of s
            let term = polymul(&binomial_poly(-1.0, k), &binomial_poly(1.0, n - k));
            let scale = coef * c.powi(k as i32);
            for (o, t) in out.iter_mut().zip(term) {
                *o += scale * t;
            }
        }
        out
    };
    let mut b = map(tf.num());
    let mut a = map(tf.den());
    let a0 = a[0];
    if a0 == 0.0 {
        return Err(LtiError::Invalid(
            "bilinear transform produced a non-causal denominator (pole at s = 2/T)".into(),
        ));
    }
    b.iter_mut().for_each(|x| *x /= a0);
    a.iter_mut().for_each(|x| *x /= a0);
    Ok(DiscreteTf { b, a, ts })
}

/// Frequency at which a continuous response must be evaluated to reproduce
/// the Tustin-discretized response at `omega`.
pub fn tustin_warp(omega: f64, ts: f64) -> f64 {
    2.0 / ts * (omega * ts / 2.0).tan()
}

/// Direct form II transposed realization of a [`DiscreteTf`].
#[derive(Debug, Clone)]
pub struct DiscreteFilter {
    b: Vec<f64>,
    a: Vec<f64>,
    state: Vec<f64>,
}

impl DiscreteFilter {
    pub fn new(tf: &DiscreteTf) -> Self {
        let n = tf.a.len();
        Self {
            b: tf.b.clone(),
            a: tf.a.clone(),
            state: vec![0.0; n.saturating_sub(1)],
        }
    }

    pub fn reset(&mut self) {
        self.state.iter_mut().for_each(|s| *s = 0.0);
    }

    pub fn step(&mut self, u: f64) -> f64 {
        let y = self.b[0] * u + self.state.first().copied().unwrap_or(0.0);
        let n = self.state.len();
        for i in 0..n {
            let next = if i + 1 < n { self.state[i + 1] } else { 0.0 };
            self.state[i] = next + self.b[i + 1] * u - self.a[i + 1] * y;
        }
        y
    }
}

/// Cascade of discretized factors.
#[derive(Debug, Clone)]
pub struct DiscreteChain {
    stages: Vec<DiscreteFilter>,
}

impl DiscreteChain {
    pub fn new(chain: &TfChain, ts: f64) -> Result<Self, LtiError> {
        let stages = chain
            .factors()
            .iter()
            .map(|f| tustin_discretize(f, ts).map(|d| DiscreteFilter::new(&d)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { stages })
    }

    pub fn step(&mut self, u: f64) -> f64 {
        self.stages.iter_mut().fold(u, |x, s| s.step(x))
    }

    pub fn reset(&mut self) {
        self.stages.iter_mut().for_each(DiscreteFilter::reset);
    }
}
