//! Interior landmarks: locating points in the rest mesh and carrying them
//! along a displacement field.

use crate::elasticity::Displacement;
use crate::mesh::TetMesh;
use crate::Vec3;

/// A point expressed in one tetrahedron's barycentric coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Location {
    pub tet: usize,
    pub weights: [f64; 4],
}

/// First tetrahedron containing `p` (with tolerance `1e-12` on the
/// barycentric weights), by linear scan.
pub fn locate_point(mesh: &TetMesh, p: &Vec3) -> Option<Location> {
    mesh.tets().iter().enumerate().find_map(|(t, tet)| {
        let x = tet.map(|v| mesh.vertices()[v]);
        let m = nalgebra::Matrix3::from_columns(&[x[1] - x[0], x[2] - x[0], x[3] - x[0]]);
        let l = m.lu().solve(&(p - x[0]))?;
        let w = [1.0 - l.sum(), l.x, l.y, l.z];
        w.iter().all(|&w| w >= -1e-12).then_some(Location { tet: t, weights: w })
    })
}

/// Displacement at a located point (P1 interpolation).
pub fn interpolate(mesh: &TetMesh, u: &Displacement, loc: &Location) -> Vec3 {
    mesh.tets()[loc.tet]
        .iter()
        .zip(&loc.weights)
        .map(|(&v, &w)| u.values()[v] * w)
        .sum()
}
