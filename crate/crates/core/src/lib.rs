//! Stochastic control of diffusions on a star-shaped network with a
//! controlled local-time transmission condition at the junction.
//!
//! - [`network`]: geometry of the star network;
//! - [`model`]: problem data, Hamiltonians and assumption checks;
//! - [`hjb`]: backward finite-difference solver;
//! - [`simulate`]: Monte Carlo simulation of the spider diffusion;
//! - [`verify`]: oracles and cross-checks between the two.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod hjb;
pub mod instances;
pub mod model;
pub mod network;
pub mod simulate;
pub mod verify;

pub use error::{Error, Result};
