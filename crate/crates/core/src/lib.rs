//! Bingham flow in thin porous media.
//!
//! The crate discretizes the rescaled thin domain `omega_eps x (0,1)` and the
//! unit cell `Y` on staggered grids, solves the Bingham variational
//! inequality with an augmented Lagrangian method, evaluates the three
//! regime-specific cell problems and their nonlinear permeability, and
//! solves the resulting nonlinear Darcy law on `omega`.
//!
//! Every numerical routine is generic over [`Real`] (`f32` or `f64`); the
//! `*64` aliases below fix the common double precision instantiation.

pub mod cell_problems;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod macroscale;
pub mod real;
pub mod vi_solver;

pub use error::{Error, Result};
pub use real::Real;

pub type MediumSpec64 = geometry::MediumSpec<f64>;
pub type StructuredGrid64 = geometry::StructuredGrid<f64>;
pub type CellGrid64 = geometry::CellGrid<f64>;
pub type ThinGrid64 = geometry::ThinGrid<f64>;
pub type StaggeredField64 = fields::StaggeredField<f64>;
pub type ScalarField64 = fields::ScalarField<f64>;
pub type TensorField64 = fields::TensorField<f64>;
pub type UnfoldedField64 = fields::UnfoldedField<f64>;
pub type CellSolver64 = cell_problems::CellSolver<f64>;
pub type PermeabilityTable64 = cell_problems::PermeabilityTable<f64>;
pub type DarcySolution64 = macroscale::DarcySolution<f64>;
