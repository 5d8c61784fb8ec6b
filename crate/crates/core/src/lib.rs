//! Pseudo-spectral laboratory for the two-dimensional quasi-geostrophic
//! equation with fractional dissipation and dispersive forcing,
//!
//! `d_t theta + kappa (-Laplace)^{alpha/2} theta + u . grad theta + A R_1 theta = 0`,
//! `u = (-R_2 theta, R_1 theta)`,
//!
//! on a periodic square. The crate provides the spectral field types, the
//! dyadic (Littlewood-Paley) norm calculus, the exact linear semigroup,
//! an integrating-factor solver, the successive-approximation scheme with
//! contraction diagnostics, and empirical checks of the bilinear estimates.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod estimates;
pub mod evolution;
pub mod littlewood_paley;
pub mod operators;
pub mod paraproduct;
pub mod picard;
pub mod propagator;
pub mod spectral;

pub use error::{Error, Result};
