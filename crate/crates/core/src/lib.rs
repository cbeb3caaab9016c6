//! Numerical hyperbolicity toolkit for surface diffeomorphisms.
//!
//! - [`maps`]: torus diffeomorphism families, Jacobians, derivative bounds.
//! - [`cocycle`]: QR cocycle, finite-time Lyapunov exponents, direction estimates.
//! - [`pliss`]: Pliss times of real sequences.
//! - [`cp`]: constant schedule and CP1..CP5 membership.
//! - [`experiment`]: orbit scans, Birkhoff frequencies, reports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cocycle;
pub mod cp;
mod error;
pub mod experiment;
pub mod linalg;
pub mod maps;
pub mod pliss;

pub use error::{Error, Result};
