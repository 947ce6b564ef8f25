//! Power-optimal 3-D deployment of UAV base stations with directional
//! antennas over a planar region.

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod baselines;
pub mod density;
pub mod error;
pub mod export;
pub mod geometry;
pub mod lloyd;
pub mod power;
pub mod quadrature;
pub mod runner;
pub mod scenario;
pub mod tessellation;

pub use error::{Error, Result};
