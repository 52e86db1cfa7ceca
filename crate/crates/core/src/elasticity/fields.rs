use serde::{Deserialize, Serialize};

use crate::mesh::TetMesh;
use crate::{Error, Result, Vec3};

/// Nodal displacement field over all mesh vertices (meters).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Displacement(pub Vec<Vec3>);

impl Displacement {
    pub fn zeros(n: usize) -> Self {
        Displacement(vec![Vec3::zeros(); n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[Vec3] {
        &self.0
    }

    /// Deformed vertex positions `x + u`.
    pub fn deformed_positions(&self, mesh: &TetMesh) -> Vec<Vec3> {
        mesh.vertices().iter().zip(&self.0).map(|(x, u)| x + u).collect()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Displacement(self.0.iter().map(|v| v * s).collect())
    }

    pub fn max_norm(&self) -> f64 {
        self.0.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Nodal force field restricted to a set of control vertices.
///
/// Values outside `support` are zero. The flat control vector used by the
/// optimizer lists the three components of each support vertex in support
/// order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForceField {
    values: Vec<Vec3>,
    support: Vec<usize>,
}

impl ForceField {
    pub fn zeros(vertex_count: usize, support: Vec<usize>) -> Result<Self> {
        Self::new(vec![Vec3::zeros(); vertex_count], support)
    }

    /// Validates that `values` vanishes outside `support`.
    pub fn new(values: Vec<Vec3>, mut support: Vec<usize>) -> Result<Self> {
        support.sort_unstable();
        support.dedup();
        if let Some(&v) = support.iter().find(|&&v| v >= values.len()) {
            return Err(Error::InvalidArgument(format!("support vertex {v} out of range")));
        }
        let mut inside = vec![false; values.len()];
        for &v in &support {
            inside[v] = true;
        }
        if let Some(v) = (0..values.len()).find(|&v| !inside[v] && values[v] != Vec3::zeros()) {
            return Err(Error::InvalidArgument(format!(
                "force field is nonzero at vertex {v} outside its support"
            )));
        }
        Ok(ForceField { values, support })
    }

    pub fn from_control(vertex_count: usize, support: &[usize], control: &[f64]) -> Self {
        assert_eq!(control.len(), 3 * support.len());
        let mut values = vec![Vec3::zeros(); vertex_count];
        for (k, &v) in support.iter().enumerate() {
            values[v] = Vec3::new(control[3 * k], control[3 * k + 1], control[3 * k + 2]);
        }
        ForceField {
            values,
            support: support.to_vec(),
        }
    }

    pub fn to_control(&self) -> Vec<f64> {
        self.support
            .iter()
            .flat_map(|&v| [self.values[v].x, self.values[v].y, self.values[v].z])
            .collect()
    }

    pub fn values(&self) -> &[Vec3] {
        &self.values
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_squared()).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, s: f64) -> Self {
        ForceField {
            values: self.values.iter().map(|v| v * s).collect(),
            support: self.support.clone(),
        }
    }

    /// Same values re-expressed on a larger support (must contain the current one).
    pub fn with_support(&self, support: Vec<usize>) -> Result<Self> {
        Self::new(self.values.clone(), support)
    }
}

/// Consistent nodal forces of a uniform traction (Pa) on boundary triangles:
/// each triangle passes a third of `traction * area` to each of its vertices.
pub fn traction_to_nodal(mesh: &TetMesh, tris: &[usize], traction: &Vec3) -> Vec<Vec3> {
    let mut f = vec![Vec3::zeros(); mesh.vertex_count()];
    for &t in tris {
        let share = traction * (mesh.triangle_area(t) / 3.0);
        for &v in &mesh.boundary_tris()[t] {
            f[v] += share;
        }
    }
    f
}
