//! Solitary waves of the Fornberg-Whitham equation
//! u_t + u u_x + (1 - d_x^2)^{-1} u_x = 0 on periodic domains.
//!
//! Two independent routes compute the waves: penalized constrained
//! minimization of J(u) = -1/2 int u L u - 1/6 int u^3 over the sphere
//! int u^2 = q ([`variational`]), and a stabilized fixed point of the
//! convolution form u = 1/2 (c - L)^{-1} u^2 ([`wave`]). [`dynamics`] evolves
//! the equation pseudospectrally for the orbital-stability experiments in
//! [`analysis`], which also carries the concentration-compactness and
//! subadditivity diagnostics.

pub mod analysis;
pub mod dynamics;
pub mod error;
mod fourier;
pub mod functionals;
pub mod grid;
pub mod io;
pub mod operators;
pub mod variational;
pub mod wave;

pub use error::{FwError, Result};
pub use grid::{Field, PeriodicGrid, SobolevIndex};
