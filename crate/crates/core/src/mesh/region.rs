use serde::{Deserialize, Serialize};

use crate::{Error, Result, Vec3};

use super::TetMesh;

/// Boundary triangles whose centroid satisfies `predicate`, in id order.
pub fn select_region(mesh: &TetMesh, predicate: impl Fn(&Vec3) -> bool) -> Vec<usize> {
    (0..mesh.boundary_tris().len())
        .filter(|&t| predicate(&mesh.triangle_centroid(t)))
        .collect()
}

/// Serializable geometric selectors used by configs and label presets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegionSelector {
    All,
    /// Triangles on the bounding-box face `axis` at its minimum (`max = false`)
    /// or maximum, within `tol` times the box diameter.
    BoxFace { axis: usize, max: bool, tol: f64 },
    Ball { center: [f64; 3], radius: f64 },
    /// Centroids with `normal . c >= offset`.
    HalfSpace { normal: [f64; 3], offset: f64 },
    /// The `count` triangles whose centroids are closest to `point`
    /// (ties broken by id).
    Nearest { point: [f64; 3], count: usize },
    /// Triangles of `within` taken in decreasing order of `direction . c`
    /// until they cover `area_fraction` of its area.
    Sweep {
        direction: [f64; 3],
        area_fraction: f64,
        within: Box<RegionSelector>,
    },
    Union { parts: Vec<RegionSelector> },
    /// Triangles of `base` not selected by `remove`.
    Difference {
        base: Box<RegionSelector>,
        remove: Box<RegionSelector>,
    },
}

impl RegionSelector {
    pub fn select(&self, mesh: &TetMesh) -> Result<Vec<usize>> {
        Ok(match self {
            RegionSelector::All => (0..mesh.boundary_tris().len()).collect(),
            RegionSelector::BoxFace { axis, max, tol } => {
                if *axis > 2 {
                    return Err(Error::Config(format!("box face axis {axis} out of range")));
                }
                let (lo, hi) = mesh.bounding_box();
                let target = if *max { hi[*axis] } else { lo[*axis] };
                let eps = tol * mesh.diameter();
                select_region(mesh, |c| (c[*axis] - target).abs() <= eps)
            }
            RegionSelector::Ball { center, radius } => {
                let c0 = Vec3::from(*center);
                select_region(mesh, |c| (c - c0).norm() <= *radius)
            }
            RegionSelector::HalfSpace { normal, offset } => {
                let n = Vec3::from(*normal);
                select_region(mesh, |c| n.dot(c) >= *offset)
            }
            RegionSelector::Nearest { point, count } => {
                let p = Vec3::from(*point);
                let mut ranked: Vec<(f64, usize)> = (0..mesh.boundary_tris().len())
                    .map(|t| ((mesh.triangle_centroid(t) - p).norm_squared(), t))
                    .collect();
                ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let mut ids: Vec<usize> = ranked.iter().take(*count).map(|&(_, t)| t).collect();
                ids.sort_unstable();
                ids
            }
            RegionSelector::Sweep {
                direction,
                area_fraction,
                within,
            } => {
                if !(0.0..=1.0).contains(area_fraction) {
                    return Err(Error::Config(format!("area fraction {area_fraction} outside [0, 1]")));
                }
                let d = Vec3::from(*direction);
                let base = within.select(mesh)?;
                let total: f64 = base.iter().map(|&t| mesh.triangle_area(t)).sum();
                let mut ranked: Vec<(f64, usize)> =
                    base.iter().map(|&t| (d.dot(&mesh.triangle_centroid(t)), t)).collect();
                ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
                let mut covered = 0.0;
                let mut ids = Vec::new();
                for (_, t) in ranked {
                    if covered >= area_fraction * total {
                        break;
                    }
                    covered += mesh.triangle_area(t);
                    ids.push(t);
                }
                ids.sort_unstable();
                ids
            }
            RegionSelector::Union { parts } => {
                let mut ids = Vec::new();
                for p in parts {
                    ids.extend(p.select(mesh)?);
                }
                ids.sort_unstable();
                ids.dedup();
                ids
            }
            RegionSelector::Difference { base, remove } => {
                let removed = remove.select(mesh)?;
                base.select(mesh)?
                    .into_iter()
                    .filter(|t| removed.binary_search(t).is_err())
                    .collect()
            }
        })
    }
}

/// The `count` vertices from `candidates` closest to `center`, sorted by id.
pub fn nearest_boundary_vertices(
    mesh: &TetMesh,
    center: &Vec3,
    count: usize,
    candidates: &[usize],
) -> Vec<usize> {
    let mut ranked: Vec<(f64, usize)> = candidates
        .iter()
        .map(|&v| ((mesh.vertices()[v] - center).norm_squared(), v))
        .collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut ids: Vec<usize> = ranked.into_iter().take(count).map(|(_, v)| v).collect();
    ids.sort_unstable();
    ids
}
