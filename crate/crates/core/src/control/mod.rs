//! Optimal control of the boundary force distribution: adjoint gradients,
//! L-BFGS minimization and force resultants.

mod adjoint;
mod lbfgs;
mod minimize;
mod problem;

pub use adjoint::{adjoint_solve, AdjointState};
pub use minimize::{minimize, MinimizeOutcome, MinimizeReport, Minimizer};
pub use problem::{objective_and_gradient, ControlProblem, Evaluation, GradientReference, OptimizerParams, Regularizer};

use crate::elasticity::ForceField;
use crate::Vec3;

/// Sum of the nodal forces of `b` over `region`.
pub fn force_resultant(b: &ForceField, region: &[usize]) -> Vec3 {
    region.iter().map(|&v| b.values()[v]).sum()
}
