//! Pseudospectral simulation and verification toolkit for the semilinear
//! mixed local–nonlocal diffusion problem
//!
//! ```text
//! ∂_t u + t^β (-Δ + (-Δ)^{α/2}) u = -h(t) u^p,    u(·, 0) = u_0 ≥ 0,
//! ```
//!
//! discretized on periodic torus grids.

// Negated comparisons are deliberate: they reject NaN arguments.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimates;
pub mod export;
pub mod grid;
pub mod kernels;
pub mod operators;
pub mod solver;
mod special;
pub mod timechange;

pub use error::{Error, Result};
pub use grid::{Field, Grid, Norm, Spectrum};
