//! Observed point clouds and the closest-point discrepancy functional
//! `J(u) = 1/(2m) Σ ‖p_u(y_j) − y_j‖²` with its nodal gradient.

mod bvh;
pub mod cloud;
mod triangle;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::elasticity::Displacement;
use crate::mesh::TetMesh;
use crate::{Error, Result, Vec3};

use bvh::TriangleTree;

pub use cloud::{read_cloud, write_xyz, PointCloud};
pub use triangle::closest_point_barycentric;

/// Closest point of a cloud point on the deformed boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    /// Boundary triangle id.
    pub triangle: usize,
    pub barycentric: [f64; 3],
    pub position: Vec3,
}

/// Nearest-point queries against (a subset of) the deformed boundary.
///
/// The tree is built for one displacement and must be rebuilt when the
/// displacement changes.
#[derive(Debug, Clone)]
pub struct SurfaceProjector {
    tree: TriangleTree,
}

impl SurfaceProjector {
    /// `triangles = None` uses every boundary triangle.
    pub fn new(mesh: &TetMesh, u: &Displacement, triangles: Option<&[usize]>) -> Result<Self> {
        if u.len() != mesh.vertex_count() {
            return Err(Error::InvalidArgument("displacement size does not match mesh".into()));
        }
        let positions = u.deformed_positions(mesh);
        let bt = mesh.boundary_tris();
        let ids: Vec<usize> = match triangles {
            Some(t) => t.to_vec(),
            None => (0..bt.len()).collect(),
        };
        if ids.is_empty() {
            return Err(Error::Config("no triangles to project onto (empty matching set)".into()));
        }
        if let Some(&t) = ids.iter().find(|&&t| t >= bt.len()) {
            return Err(Error::Config(format!("triangle {t} is not a boundary triangle")));
        }
        let tris = ids
            .into_iter()
            .map(|t| (t, bt[t].map(|v| positions[v])))
            .collect();
        Ok(SurfaceProjector {
            tree: TriangleTree::build(tris),
        })
    }

    pub fn project(&self, y: &Vec3) -> Projection {
        let hit = self.tree.nearest(y).expect("projector has triangles");
        let [a, b, c] = hit.corners;
        Projection {
            triangle: hit.id,
            barycentric: hit.barycentric,
            position: triangle::combine(&hit.barycentric, &a, &b, &c),
        }
    }

    pub fn project_all(&self, cloud: &PointCloud) -> Vec<Projection> {
        cloud.points().par_iter().map(|y| self.project(y)).collect()
    }
}

/// Closest point of `y` on the deformed boundary (restricted to `triangles`
/// when given). Ties go to the lowest triangle id.
pub fn project_point(mesh: &TetMesh, u: &Displacement, y: &Vec3, triangles: Option<&[usize]>) -> Result<Projection> {
    Ok(SurfaceProjector::new(mesh, u, triangles)?.project(y))
}

/// `J(u)` together with the projections it used.
pub fn functional(
    mesh: &TetMesh,
    u: &Displacement,
    cloud: &PointCloud,
    triangles: Option<&[usize]>,
) -> Result<(f64, Vec<Projection>)> {
    let projector = SurfaceProjector::new(mesh, u, triangles)?;
    let projections = projector.project_all(cloud);
    Ok((functional_value(cloud, &projections), projections))
}

pub fn functional_value(cloud: &PointCloud, projections: &[Projection]) -> f64 {
    let m = cloud.len() as f64;
    cloud
        .points()
        .iter()
        .zip(projections)
        .map(|(y, p)| (p.position - y).norm_squared())
        .sum::<f64>()
        / (2.0 * m)
}

/// Nodal gradient of `J` with projections held fixed: each residual
/// `(r_j − y_j)/m` is spread over its triangle's vertices with the
/// barycentric weights.
pub fn functional_gradient(
    mesh: &TetMesh,
    u: &Displacement,
    cloud: &PointCloud,
    projections: &[Projection],
) -> Result<Vec<Vec3>> {
    if projections.len() != cloud.len() {
        return Err(Error::Consistency(format!(
            "{} projections for {} cloud points",
            projections.len(),
            cloud.len()
        )));
    }
    let positions = u.deformed_positions(mesh);
    let tol = 1e-9 * mesh.diameter().max(1.0);
    let m = cloud.len() as f64;
    let mut grad = vec![Vec3::zeros(); mesh.vertex_count()];
    for (j, (y, p)) in cloud.points().iter().zip(projections).enumerate() {
        let tri = mesh
            .boundary_tris()
            .get(p.triangle)
            .ok_or_else(|| Error::Consistency(format!("projection {j} references unknown triangle")))?;
        let corners = tri.map(|v| positions[v]);
        let expected = triangle::combine(&p.barycentric, &corners[0], &corners[1], &corners[2]);
        if (expected - p.position).norm() > tol {
            return Err(Error::Consistency(format!(
                "projection {j} is stale for the current displacement"
            )));
        }
        let r = (p.position - y) / m;
        for k in 0..3 {
            grad[tri[k]] += r * p.barycentric[k];
        }
    }
    Ok(grad)
}
