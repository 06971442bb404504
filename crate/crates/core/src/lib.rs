//! Numerical core for the two-dimensional inhomogeneous Prandtl
//! boundary-layer equations on the half-space `T x R+`.
//!
//! The crate is `no_std` with `alloc`. Everything that touches the file
//! system, the command line or a text format lives in `prandtl-lab`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod fft;
mod math;

pub mod compat;
pub mod energy;
pub mod error;
pub mod good_unknowns;
pub mod grid;
pub mod inequality;
pub mod interp;
pub mod linalg;
pub mod manufactured;
pub mod stencil;
pub mod steady;
pub mod unsteady;

pub use error::{Error, Result};
pub use grid::{ddx, ddy, make_grid, weighted_norm, Grid2D, NormMode, ScalarField, WeightParams, YAxis};
