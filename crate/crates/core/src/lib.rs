//! Monte Carlo quantum trajectories for a triple quantum dot whose detuned
//! central dot is continuously monitored by a charge detector.
//!
//! Units throughout: `hbar = e = 1`, energies and rates in units of the
//! inter-dot hopping `Omega`, times in units of `1/Omega`.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod diffusive;
pub mod error;
pub mod harness;
pub mod jump;
pub mod master;
pub mod model;
pub mod observables;
pub mod output;
pub mod params;
pub mod state;
pub mod steady;
pub mod validate;

pub use error::{Error, Result};
pub use params::{Bath, BiasMode, SystemParams};
pub use state::{Basis, DensityMatrix, HermitianMatrix4, Mat4};
