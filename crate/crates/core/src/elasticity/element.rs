//! Constant-strain (P1) tetrahedron kinematics and constitutive response.

use nalgebra::{Matrix3, SMatrix};

use crate::mesh::TetMesh;
use crate::Vec3;

use super::material::{MaterialKind, MaterialModel};

pub(crate) type ElementMatrix = SMatrix<f64, 12, 12>;

/// Reference-configuration shape function gradients and volume of a tet.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ElementGeometry {
    pub grads: [Vec3; 4],
    pub volume: f64,
}

impl ElementGeometry {
    pub fn new(x: [Vec3; 4]) -> Self {
        let dm = Matrix3::from_columns(&[x[1] - x[0], x[2] - x[0], x[3] - x[0]]);
        let volume = dm.determinant() / 6.0;
        // rows of Dm^-1 are the gradients of the barycentric coordinates 1..3
        let inv = dm.try_inverse().expect("validated tet is invertible");
        let g1: Vec3 = inv.row(0).transpose();
        let g2: Vec3 = inv.row(1).transpose();
        let g3: Vec3 = inv.row(2).transpose();
        ElementGeometry {
            grads: [-(g1 + g2 + g3), g1, g2, g3],
            volume,
        }
    }

    pub fn all(mesh: &TetMesh) -> Vec<Self> {
        mesh.tets()
            .iter()
            .map(|t| ElementGeometry::new(t.map(|i| mesh.vertices()[i])))
            .collect()
    }

    /// Displacement gradient `H = sum_a u_a ⊗ grad N_a`.
    pub fn displacement_gradient(&self, u: [Vec3; 4]) -> Matrix3<f64> {
        u.iter()
            .zip(&self.grads)
            .fold(Matrix3::zeros(), |h, (ua, ga)| h + ua * ga.transpose())
    }
}

fn sym(m: &Matrix3<f64>) -> Matrix3<f64> {
    0.5 * (m + m.transpose())
}

/// Strain energy density and first Piola–Kirchhoff stress at displacement gradient `h`.
pub(crate) fn stress(material: &MaterialModel, lambda: f64, mu: f64, h: &Matrix3<f64>) -> (f64, Matrix3<f64>) {
    match material.kind {
        MaterialKind::Linear => {
            let eps = sym(h);
            let tr = eps.trace();
            let sigma = Matrix3::identity() * (lambda * tr) + 2.0 * mu * eps;
            let w = 0.5 * lambda * tr * tr + mu * eps.component_mul(&eps).sum();
            (w, sigma)
        }
        MaterialKind::StVenantKirchhoff => {
            let f = Matrix3::identity() + h;
            let e = 0.5 * (f.transpose() * f - Matrix3::identity());
            let tr = e.trace();
            let s = Matrix3::identity() * (lambda * tr) + 2.0 * mu * e;
            let w = 0.5 * lambda * tr * tr + mu * e.component_mul(&e).sum();
            (w, f * s)
        }
    }
}

/// Directional derivative of the first Piola stress along `dh`.
fn stress_increment(
    material: &MaterialModel,
    lambda: f64,
    mu: f64,
    h: &Matrix3<f64>,
    dh: &Matrix3<f64>,
) -> Matrix3<f64> {
    match material.kind {
        MaterialKind::Linear => {
            let de = sym(dh);
            Matrix3::identity() * (lambda * de.trace()) + 2.0 * mu * de
        }
        MaterialKind::StVenantKirchhoff => {
            let f = Matrix3::identity() + h;
            let e = 0.5 * (f.transpose() * f - Matrix3::identity());
            let s = Matrix3::identity() * (lambda * e.trace()) + 2.0 * mu * e;
            let de = 0.5 * (dh.transpose() * f + f.transpose() * dh);
            let ds = Matrix3::identity() * (lambda * de.trace()) + 2.0 * mu * de;
            dh * s + f * ds
        }
    }
}

/// Element energy and internal nodal forces.
pub(crate) fn element_forces(
    geom: &ElementGeometry,
    material: &MaterialModel,
    lambda: f64,
    mu: f64,
    u: [Vec3; 4],
) -> (f64, [Vec3; 4]) {
    let h = geom.displacement_gradient(u);
    let (w, p) = stress(material, lambda, mu, &h);
    let f = geom.grads.map(|g| geom.volume * (p * g));
    (geom.volume * w, f)
}

/// 12x12 element tangent, dof ordering `3 * local_vertex + component`.
pub(crate) fn element_tangent(
    geom: &ElementGeometry,
    material: &MaterialModel,
    lambda: f64,
    mu: f64,
    u: [Vec3; 4],
) -> ElementMatrix {
    let h = geom.displacement_gradient(u);
    let mut k = ElementMatrix::zeros();
    for b in 0..4 {
        for j in 0..3 {
            let mut dh = Matrix3::zeros();
            dh.set_row(j, &geom.grads[b].transpose());
            let dp = stress_increment(material, lambda, mu, &h, &dh);
            for a in 0..4 {
                let col = geom.volume * (dp * geom.grads[a]);
                for i in 0..3 {
                    k[(3 * a + i, 3 * b + j)] = col[i];
                }
            }
        }
    }
    k
}
