//! One-dimensional reduced density-functional model for homogeneous 2D slabs
//! in a constant perpendicular magnetic field.
//!
//! The Pauli principle of the three-dimensional problem is replaced by the
//! magnetic kinetic penalty `F(b, g)` acting on a reduced state `G` on the
//! transverse axis. The crate provides the penalty itself, a 1D
//! finite-difference discretization, the 1D Hartree machinery, the reduced
//! Hartree-Fock energy with a self-consistent solver, and a numerical Landau
//! level layer that certifies the 3D to 1D reduction.

pub mod cli;
pub mod error;
pub mod grid1d;
pub mod hartree;
pub mod landau;
pub mod penalty;
pub mod scf;
pub mod state;

pub use error::{Error, Result};
pub use grid1d::{Eigenpairs, Grid, GridFunction, TridiagonalOperator};
pub use penalty::{FieldStrength, Penalty, SmoothingParams, SpinMode};
pub use scf::{ScfConfig, ScfResult};
pub use state::{ChargeProfile, EnergyBreakdown, ReducedState};
