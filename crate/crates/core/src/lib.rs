//! Viscous shock profiles for 1D isothermal gas dynamics in Lagrangian
//! coordinates, weighted relative-entropy contraction diagnostics with a
//! dynamic shift, and vanishing-viscosity sweeps.
//!
//! The crate is organized bottom-up:
//! - [`model`]: gas law, entropy kernel, jump-condition solver;
//! - [`numerics`]: grids, quadrature, difference stencils, interpolation;
//! - [`profiles`]: traveling-wave profile construction and validation;
//! - [`dynamics`]: the viscous solver in the frame moving with the shock;
//! - [`functionals`]: weight, relative entropy, and the contraction-rate
//!   functionals with their truncated and normalized variants;
//! - [`shift`]: the shift dynamics coupled to the solver and the
//!   contraction verdict;
//! - [`limits`]: well-prepared data and viscosity sweeps;
//! - [`inequality_lab`]: sampling checks of the scalar inequalities behind
//!   the contraction estimate;
//! - [`config`], [`io`]: run configuration and CSV artifacts.

// Guards are written `!(x > 0.0)` on purpose: the negation rejects NaN along
// with the wrong sign, which `x <= 0.0` would silently accept.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod dynamics;
pub mod error;
pub mod functionals;
pub mod inequality_lab;
pub mod io;
pub mod limits;
pub mod model;
pub mod numerics;
pub mod profiles;
pub mod shift;

pub use error::{Error, Result};
