//! Tetrahedral meshes, derived boundary surfaces and region labels.

mod generate;
pub mod io;
mod region;

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Vec3};

pub use generate::generate_box_mesh;
pub use region::{nearest_boundary_vertices, select_region, RegionSelector};

/// Local faces of a positively oriented tet, each listed so that its normal
/// points away from the opposite vertex (face `f` is opposite vertex `f`).
pub(crate) const TET_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 3, 2], [0, 1, 3], [0, 2, 1]];

/// Tetrahedral volume mesh with its outward boundary triangles.
///
/// Immutable after construction. Every tet has strictly positive signed
/// volume, and `boundary_tris` lists the faces that belong to exactly one
/// tet, ordered by owning tet id and then local face id.
#[derive(Debug, Clone, PartialEq)]
pub struct TetMesh {
    vertices: Vec<Vec3>,
    tets: Vec<[usize; 4]>,
    boundary_tris: Vec<[usize; 3]>,
    boundary_owners: Vec<(usize, usize)>,
}

pub(crate) fn signed_volume(a: &Vec3, b: &Vec3, c: &Vec3, d: &Vec3) -> f64 {
    (b - a).cross(&(c - a)).dot(&(d - a)) / 6.0
}

impl TetMesh {
    /// Builds a mesh, rejecting out-of-range indices and tets whose signed
    /// volume is not strictly positive.
    pub fn new(vertices: Vec<Vec3>, tets: Vec<[usize; 4]>) -> Result<Self> {
        if tets.is_empty() {
            return Err(Error::InvalidMesh("mesh has no tetrahedra".into()));
        }
        if let Some(i) = vertices.iter().position(|v| !v.iter().all(|x| x.is_finite())) {
            return Err(Error::InvalidMesh(format!("vertex {i} has non-finite coordinates")));
        }
        let n = vertices.len();
        for (t, tet) in tets.iter().enumerate() {
            if let Some(&bad) = tet.iter().find(|&&i| i >= n) {
                return Err(Error::InvalidMesh(format!(
                    "tet {t} references vertex {bad} but the mesh has {n} vertices"
                )));
            }
            let [a, b, c, d] = tet.map(|i| vertices[i]);
            let vol = signed_volume(&a, &b, &c, &d);
            let edge = [b - a, c - a, d - a, c - b, d - b, d - c]
                .iter()
                .map(|e| e.norm())
                .fold(0.0, f64::max);
            if vol.abs() <= 1e-12 * edge.powi(3) {
                return Err(Error::InvalidMesh(format!("tet {t} is degenerate (volume {vol:e})")));
            }
            if vol < 0.0 {
                return Err(Error::InvalidMesh(format!("tet {t} has negative orientation")));
            }
        }
        let (boundary_tris, boundary_owners) = extract_boundary_faces(&tets)?;
        Ok(TetMesh {
            vertices,
            tets,
            boundary_tris,
            boundary_owners,
        })
    }

    /// Like [`TetMesh::new`], but flips inverted tets instead of rejecting
    /// them. Degenerate tets are still rejected.
    pub fn from_unoriented(vertices: Vec<Vec3>, mut tets: Vec<[usize; 4]>) -> Result<Self> {
        for tet in &mut tets {
            if tet.iter().all(|&i| i < vertices.len()) {
                let [a, b, c, d] = tet.map(|i| vertices[i]);
                if signed_volume(&a, &b, &c, &d) < 0.0 {
                    tet.swap(2, 3);
                }
            }
        }
        Self::new(vertices, tets)
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn tets(&self) -> &[[usize; 4]] {
        &self.tets
    }

    pub fn boundary_tris(&self) -> &[[usize; 3]] {
        &self.boundary_tris
    }

    /// `(tet id, local face id)` owning each boundary triangle.
    pub fn boundary_owners(&self) -> &[(usize, usize)] {
        &self.boundary_owners
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn tet_volume(&self, t: usize) -> f64 {
        let [a, b, c, d] = self.tets[t].map(|i| self.vertices[i]);
        signed_volume(&a, &b, &c, &d)
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.tets.len()).map(|t| self.tet_volume(t)).sum()
    }

    pub fn triangle_centroid(&self, tri: usize) -> Vec3 {
        let [a, b, c] = self.boundary_tris[tri].map(|i| self.vertices[i]);
        (a + b + c) / 3.0
    }

    /// Outward area vector (normal scaled by area) of a boundary triangle.
    pub fn triangle_area_vector(&self, tri: usize) -> Vec3 {
        let [a, b, c] = self.boundary_tris[tri].map(|i| self.vertices[i]);
        0.5 * (b - a).cross(&(c - a))
    }

    pub fn triangle_area(&self, tri: usize) -> f64 {
        self.triangle_area_vector(tri).norm()
    }

    /// Sorted, deduplicated vertex ids of a set of boundary triangles.
    pub fn triangle_vertices(&self, tris: &[usize]) -> Vec<usize> {
        let set: BTreeSet<usize> = tris
            .iter()
            .flat_map(|&t| self.boundary_tris[t])
            .collect();
        set.into_iter().collect()
    }

    pub fn boundary_vertices(&self) -> Vec<usize> {
        let all: Vec<usize> = (0..self.boundary_tris.len()).collect();
        self.triangle_vertices(&all)
    }

    /// Axis-aligned bounding box `(min, max)` of the vertices.
    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }

    /// Length of the bounding-box diagonal.
    pub fn diameter(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        (hi - lo).norm()
    }

    /// Returns a copy with every vertex mapped through `f`. Tets whose
    /// orientation would flip are rejected.
    pub fn map_vertices(&self, f: impl Fn(&Vec3) -> Vec3) -> Result<TetMesh> {
        let vertices = self.vertices.iter().map(f).collect();
        TetMesh::new(vertices, self.tets.clone())
    }
}

/// Census of tet faces: returns the faces that occur in exactly one tet,
/// outward-oriented and sorted by (owning tet, local face).
pub fn extract_boundary(tets: &[[usize; 4]]) -> Result<Vec<[usize; 3]>> {
    extract_boundary_faces(tets).map(|(tris, _)| tris)
}

/// Boundary triangles with their `(tet, local face)` owners.
type BoundaryFaces = (Vec<[usize; 3]>, Vec<(usize, usize)>);

fn extract_boundary_faces(tets: &[[usize; 4]]) -> Result<BoundaryFaces> {
    let mut counts: HashMap<[usize; 3], u32> = HashMap::with_capacity(tets.len() * 4);
    for tet in tets {
        for face in TET_FACES {
            let mut key = face.map(|l| tet[l]);
            key.sort_unstable();
            *counts.entry(key).or_insert(0) += 1;
        }
    }
    if let Some((key, c)) = counts.iter().find(|(_, &c)| c > 2) {
        return Err(Error::InvalidMesh(format!(
            "face {key:?} is shared by {c} tetrahedra"
        )));
    }
    let mut tris = Vec::new();
    let mut owners = Vec::new();
    for (t, tet) in tets.iter().enumerate() {
        for (l, face) in TET_FACES.iter().enumerate() {
            let tri = face.map(|i| tet[i]);
            let mut key = tri;
            key.sort_unstable();
            if counts[&key] == 1 {
                tris.push(tri);
                owners.push((t, l));
            }
        }
    }
    Ok((tris, owners))
}

/// Named surface regions of a mesh: the matching surface compared with the
/// observation, the loaded surface where forces may act, and the fixed
/// (Dirichlet) vertices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionLabels {
    pub matching: Vec<usize>,
    pub loaded: Vec<usize>,
    pub fixed: Vec<usize>,
}

impl RegionLabels {
    /// Builds labels with sorted, deduplicated id lists.
    pub fn new(matching: Vec<usize>, loaded: Vec<usize>, fixed: Vec<usize>) -> Self {
        fn canon(mut v: Vec<usize>) -> Vec<usize> {
            v.sort_unstable();
            v.dedup();
            v
        }
        RegionLabels {
            matching: canon(matching),
            loaded: canon(loaded),
            fixed: canon(fixed),
        }
    }

    pub fn validate(&self, mesh: &TetMesh) -> Result<()> {
        let ntri = mesh.boundary_tris().len();
        for (name, set) in [("matching", &self.matching), ("loaded", &self.loaded)] {
            if let Some(&t) = set.iter().find(|&&t| t >= ntri) {
                return Err(Error::Config(format!(
                    "{name} region references triangle {t}, mesh has {ntri} boundary triangles"
                )));
            }
        }
        let boundary: BTreeSet<usize> = mesh.boundary_vertices().into_iter().collect();
        if let Some(&v) = self.fixed.iter().find(|v| !boundary.contains(v)) {
            return Err(Error::Config(format!("fixed vertex {v} is not on the boundary")));
        }
        let fixed: BTreeSet<usize> = self.fixed.iter().copied().collect();
        if let Some(v) = mesh
            .triangle_vertices(&self.loaded)
            .into_iter()
            .find(|v| fixed.contains(v))
        {
            return Err(Error::Config(format!(
                "vertex {v} is both fixed and part of the loaded region"
            )));
        }
        Ok(())
    }

    /// Vertices of the loaded triangles; the default control support.
    pub fn loaded_vertices(&self, mesh: &TetMesh) -> Vec<usize> {
        mesh.triangle_vertices(&self.loaded)
    }
}
