use crate::elasticity::{Displacement, ElasticModel};
use crate::{Result, Vec3};

/// Adjoint state `p_b`, zero on fixed DOFs.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointState(pub Vec<Vec3>);

impl AdjointState {
    pub fn values(&self) -> &[Vec3] {
        &self.0
    }
}

/// Solves the adjoint system `∇F(u_b)ᵀ p = rhs` on the free DOFs.
///
/// `u_b` must be a converged direct solution and `rhs` is normally
/// `∇J(u_b)`. With a linear material the direct-solve factorization is reused.
pub fn adjoint_solve(model: &ElasticModel, u_b: &Displacement, rhs: &[Vec3]) -> Result<AdjointState> {
    model.solve_adjoint_system(u_b, rhs).map(AdjointState)
}
