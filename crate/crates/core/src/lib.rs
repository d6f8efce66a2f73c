//! Numerical and exact reconstruction of the cusped expanding gradient Ricci
//! soliton on `R × T²` from its planar ODE reduction.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blowup;
pub mod error;
pub mod evolution;
pub mod geometry;
pub mod ode;
mod ode_tableau;
pub mod phase;
pub mod separatrix;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
