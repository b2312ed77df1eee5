//! Linear building blocks: rational transfer functions, tabulated FRFs,
//! lead and inverse-notch filters, and Tustin discretization.

mod filters;
mod frf;
mod tf;
mod tustin;

use num_complex::Complex64;
use thiserror::Error;

pub use filters::{make_inverse_notch, make_lead, NotchSpec};
pub use frf::{interp_frf, FreqUnit, FrfMetadata, FrfTable};
pub use tf::{eval_tf, RationalTf, TfChain, POLE_GUARD};
pub use tustin::{tustin_discretize, tustin_warp, DiscreteChain, DiscreteFilter, DiscreteTf};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LtiError {
    #[error("invalid linear element: {0}")]
    Invalid(String),
    #[error("transfer function is singular at s = {s}")]
    Singular { s: Complex64 },
    #[error("frequency {omega} rad/s outside table range [{min}, {max}]")]
    OutOfRange { omega: f64, min: f64, max: f64 },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("io: {0}")]
    Io(String),
}

/// Log-spaced grid with `points_per_decade` resolution, endpoints included.
pub fn log_grid(omega_min: f64, omega_max: f64, points_per_decade: usize) -> Vec<f64> {
    assert!(omega_min > 0.0 && omega_max > omega_min && points_per_decade > 0);
    let decades = (omega_max / omega_min).log10();
    let n = ((decades * points_per_decade as f64).ceil() as usize).max(1);
    (0..=n)
        .map(|k| omega_min * 10f64.powf(decades * k as f64 / n as f64))
        .collect()
}
