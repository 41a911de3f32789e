//! Numerical diagnostics for Navier-Stokes regularity criteria on periodic
//! grids: the scale-invariant energy quantities `A, E, C, D` over parabolic
//! cylinders, the heat-semigroup norm `sup_t t^{1/2} |S(t) f|_inf`, local
//! weak-Lebesgue and Sobolev norms, a pseudospectral Navier-Stokes solver,
//! and empirical checks of the functional inequalities that bound them.
//!
//! The crate is `no_std` and needs only `alloc`. File formats, reports and
//! the command line live in the companion `nsdiag` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod ball;
pub mod commutator;
pub mod error;
pub mod fft;
pub mod generate;
pub mod grid;
pub mod heat;
pub mod norms;
pub mod nse;
pub mod quadrature;
pub mod quantities;
pub mod report;
pub mod spectral;
pub mod verify;

pub use ball::{restrict_ball, Ball};
pub use error::{Error, Result};
pub use generate::{generate, FieldKind, FieldSpec};
pub use grid::{Field, Grid, ScalarField, VectorField};
pub use heat::{besov_norm, heat_evolve, BesovEstimate, BesovOptions, MeanPolicy};
pub use nse::{simulate, Integration, SimSpec};
pub use quantities::{ParabolicCylinder, ScaledQuantities, Snapshot, SpaceTimeRecord};
pub use report::{CheckCase, CheckReport};
pub use spectral::SpectralField;
