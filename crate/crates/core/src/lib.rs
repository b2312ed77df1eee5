//! Design and analysis of reset-based add-on filters for linear motion
//! controllers, driven entirely by frequency-response data.
//!
//! The crate is organised bottom-up:
//!
//! * [`lti`] – rational transfer functions, FRF tables, lead and inverse-notch
//!   filters, Tustin discretization.
//! * [`reset`] – reset elements, their discrete realization and a steady-state
//!   simulator.
//! * [`hosidf`] – higher-order sinusoidal-input describing functions of reset
//!   elements and open-loop harmonics.
//! * [`cglp`] – constant-gain lead-phase filter construction and the backward
//!   solve for the lead corner from a desired phase.
//! * [`closed_loop`] – closed-loop harmonics, pseudo-sensitivity, robustness
//!   checks and the add-on design procedure.
//! * [`sim`] – discrete closed-loop simulation, trajectories, settling and
//!   spectral metrics.

// `!(x > 0.0)` is used on purpose so NaN is rejected with the same branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cglp;
pub mod closed_loop;
pub mod fixtures;
pub mod hosidf;
pub mod io;
pub mod lti;
pub mod plot;
pub mod reset;
pub mod signal;
pub mod sim;

pub use num_complex::Complex64;

pub use cglp::{CglpDesign, PhaseTarget};
pub use closed_loop::{LoopConfig, Plant, RobustnessReport, SensitivityCurves};
pub use hosidf::HarmonicResponse;
pub use lti::{FrfTable, NotchSpec, RationalTf, TfChain};
pub use reset::ResetElement;

use thiserror::Error;

/// Crate-level error wrapping every module error.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Lti(#[from] lti::LtiError),
    #[error(transparent)]
    Reset(#[from] reset::ResetError),
    #[error(transparent)]
    Hosidf(#[from] hosidf::HosidfError),
    #[error(transparent)]
    Design(#[from] cglp::DesignError),
    #[error(transparent)]
    Analysis(#[from] closed_loop::AnalysisError),
    #[error(transparent)]
    Sim(#[from] sim::SimError),
    #[error(transparent)]
    Format(#[from] io::FormatError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
