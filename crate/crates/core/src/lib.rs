//! Optimal population control of stochastic agents: transformed-value
//! solvers for stationary (spectral) and finite-horizon (path-integral
//! quadrature) problems, and agent-ensemble simulation.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]
pub mod cli;
pub mod config;
pub mod error;
pub mod grid;
pub mod model;
pub mod quadrature;
pub mod simulate;
pub mod spectral;
pub mod transforms;

pub use error::{Error, Result};
