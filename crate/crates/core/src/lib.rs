//! Elastic registration of a tetrahedral model onto a surface point cloud,
//! posed as an optimal control problem over boundary force distributions.
//!
//! The control is a nodal force field supported on a chosen part of the
//! boundary. For a given control the static equilibrium problem is solved,
//! the deformed boundary is compared with the observed cloud through a
//! closest-point least-squares functional, and the gradient with respect to
//! the control is obtained from one adjoint solve. L-BFGS drives the loop.
//!
//! Modules:
//! - [`mesh`]: tetrahedral meshes, boundary extraction, region labels, I/O.
//! - [`elasticity`]: linear and St. Venant–Kirchhoff P1 elements, direct solves.
//! - [`objective`]: point clouds, closest-point projection, discrepancy functional.
//! - [`control`]: adjoint gradient, L-BFGS minimization, force resultants.
//! - [`rigid`]: point-to-point ICP pre-alignment.
//! - [`pipeline`]: synthetic cases, sequence estimation, registration driver.

// NaN must fail the `!(x > 0.0)` style guards used for validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod elasticity;
pub mod error;
pub mod mesh;
pub mod objective;
pub mod pipeline;
pub mod rigid;
pub mod sparse;

pub use error::{Error, Result};

/// 3D vector used for positions, displacements and forces.
pub type Vec3 = nalgebra::Vector3<f64>;
