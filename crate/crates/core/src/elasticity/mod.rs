//! P1 tetrahedral elastostatics: constitutive laws, residual and tangent
//! assembly, and constrained direct solves of `F(u) = b`.

mod element;
mod fields;
mod material;
mod model;

pub use fields::{traction_to_nodal, Displacement, ForceField};
pub use material::{lame_parameters, MaterialKind, MaterialModel};
pub use model::{DirectSolution, ElasticModel, SolveCounts, SolveStats, SolverOptions};

use crate::mesh::{RegionLabels, TetMesh};
use crate::sparse::CsrMatrix;
use crate::{Result, Vec3};

/// Internal nodal forces `F(u)`.
pub fn residual(mesh: &TetMesh, material: &MaterialModel, u: &Displacement) -> Result<Vec<Vec3>> {
    let model = ElasticModel::new(mesh.clone(), *material, RegionLabels::default())?;
    Ok(model.residual(u))
}

/// Tangent `∇F(u)` over all DOFs (no constraints applied).
pub fn tangent(mesh: &TetMesh, material: &MaterialModel, u: &Displacement) -> Result<CsrMatrix> {
    let model = ElasticModel::new(mesh.clone(), *material, RegionLabels::default())?;
    Ok(model.tangent(u))
}

/// One-shot constrained equilibrium solve; see [`ElasticModel::solve_direct`].
pub fn solve_direct(
    mesh: &TetMesh,
    material: &MaterialModel,
    labels: &RegionLabels,
    b: &ForceField,
) -> Result<Displacement> {
    let model = ElasticModel::new(mesh.clone(), *material, labels.clone())?;
    Ok(model.solve_direct(b)?.displacement)
}
