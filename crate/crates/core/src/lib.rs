//! Worst-case probability measures and model-risk metrics.
//!
//! The adversary moves probability mass at a transport cost (Wasserstein
//! approach, multipliers `alpha` and `beta`) or reweights the reference model
//! within a relative-entropy budget (KL approach, multiplier `theta`). The
//! modules cover finite state spaces, densities on a grid, Gaussian closed
//! forms, robust mean-variance portfolios and delta-hedging Monte Carlo.

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod discrete_transport;
pub mod error;
pub mod gaussian_closed_form;
pub mod grid;
pub mod hedging_sim;
pub mod io;
pub mod linalg;
pub mod params;
pub mod robust_portfolio;
pub mod worstcase_density;

pub use error::{Error, Result};
pub use grid::{GridDensity, UniformGrid};
pub use params::{CostSpec, LossSpec, RobustnessParams};
