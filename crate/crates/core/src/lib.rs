//! Numerical laboratory for non-singular flows on solenoids.
//!
//! Vector fields are Fourier–Bohr series with frequencies in N̂. The crate
//! evaluates them, builds return times and conjugacies to linear flows,
//! and decides almost periodicity through boundedness of the integral of
//! λ − λ_0 where λ = 1/v.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classification;
pub mod error;
pub mod flows;
pub mod io;
pub mod ode;
pub mod quadrature;
pub mod series;
pub mod solenoid;

pub use error::{LabError, Result};
