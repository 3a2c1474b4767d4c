//! Vortex tracking for the two-dimensional Gross-Pitaevskii equation on the
//! unit disk.
//!
//! Vortex centers evolve under the reduced point-vortex Hamiltonian system
//! ([`dynamics`]); the wave function is rebuilt from the centers by smoothing
//! the canonical harmonic map with a radial core profile ([`profile`],
//! [`reconstruction`]). A splitting solver for the full equation
//! ([`gp`]) serves as the reference at moderate core size.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod formats;
pub mod gp;
pub mod localize;
pub mod metrics;
pub mod model;
pub mod par;
pub mod profile;
pub mod reconstruction;
pub mod scenario;
pub mod spectral;

pub use error::{Error, Result};
pub use model::{
    dirac_w11_distance, separation, ComplexField, Degree, PolarGrid, ScalarField, Separation,
    Termination, TrajectoryRecord, Vec2, VectorField, VortexConfiguration,
};
