use crate::{Error, Result, Vec3};

use super::{signed_volume, TetMesh};

/// Axis permutations of the Kuhn split: each one walks from the cell's
/// lowest corner to its highest corner along the three axes in that order.
const KUHN_PATHS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

/// Structured box mesh with `nx * ny * nz` cells, each split into 6 tets.
///
/// The box spans `[0, lengths[0]] x [0, lengths[1]] x [0, lengths[2]]`.
/// Vertex `(i, j, k)` has index `i + (nx + 1) * (j + (ny + 1) * k)`. All
/// cells share the same diagonal so the split is conforming.
pub fn generate_box_mesh(nx: usize, ny: usize, nz: usize, lengths: [f64; 3]) -> Result<TetMesh> {
    if nx == 0 || ny == 0 || nz == 0 {
        return Err(Error::InvalidArgument(format!(
            "cell counts must be positive, got ({nx}, {ny}, {nz})"
        )));
    }
    if lengths.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(Error::InvalidArgument(format!(
            "box extents must be positive, got {lengths:?}"
        )));
    }
    let counts = [nx, ny, nz];
    let index = |i: usize, j: usize, k: usize| i + (nx + 1) * (j + (ny + 1) * k);

    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push(Vec3::new(
                    lengths[0] * i as f64 / nx as f64,
                    lengths[1] * j as f64 / ny as f64,
                    lengths[2] * k as f64 / nz as f64,
                ));
            }
        }
    }

    let mut tets = Vec::with_capacity(6 * nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                for path in KUHN_PATHS {
                    let mut corner = [i, j, k];
                    let mut tet = [index(i, j, k); 4];
                    for (step, &axis) in path.iter().enumerate() {
                        corner[axis] += 1;
                        debug_assert!(corner[axis] <= counts[axis]);
                        tet[step + 1] = index(corner[0], corner[1], corner[2]);
                    }
                    let [a, b, c, d] = tet.map(|v| vertices[v]);
                    if signed_volume(&a, &b, &c, &d) < 0.0 {
                        tet.swap(2, 3);
                    }
                    tets.push(tet);
                }
            }
        }
    }
    TetMesh::new(vertices, tets)
}
