#![allow(dead_code)]

use elastoreg::elasticity::{ElasticModel, MaterialModel};
use elastoreg::mesh::{generate_box_mesh, RegionLabels, RegionSelector, TetMesh};
use elastoreg::Vec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut ChaCha8Rng, scale: f64) -> Vec3 {
    Vec3::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    ) * scale
}

pub fn face(mesh: &TetMesh, axis: usize, max: bool) -> Vec<usize> {
    RegionSelector::BoxFace { axis, max, tol: 1e-9 }.select(mesh).unwrap()
}

/// Bottom clamped, top face loaded and observed.
pub fn top_loaded_labels(mesh: &TetMesh) -> RegionLabels {
    let top = face(mesh, 2, true);
    RegionLabels::new(top.clone(), top, mesh.triangle_vertices(&face(mesh, 2, false)))
}

pub fn box_model(cells: [usize; 3], lengths: [f64; 3], material: MaterialModel) -> ElasticModel {
    let mesh = generate_box_mesh(cells[0], cells[1], cells[2], lengths).unwrap();
    let labels = top_loaded_labels(&mesh);
    ElasticModel::new(mesh, material, labels).unwrap()
}

/// Exact point-triangle distance by independent means: the plane foot when it
/// falls inside the triangle, otherwise the nearest of the three edges.
pub fn point_triangle_distance(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    let n = (b - a).cross(&(c - a));
    let foot = p - n * ((p - a).dot(&n) / n.norm_squared());
    let inside = [(a, b), (b, c), (c, a)]
        .iter()
        .all(|(u, v)| (*v - *u).cross(&(foot - *u)).dot(&n) >= 0.0);
    if inside {
        return (p - foot).norm();
    }
    [(a, b), (b, c), (c, a)]
        .iter()
        .map(|(u, v)| {
            let d = *v - *u;
            let t = ((p - *u).dot(&d) / d.norm_squared()).clamp(0.0, 1.0);
            (p - (*u + d * t)).norm()
        })
        .fold(f64::INFINITY, f64::min)
}

pub fn flat(v: &[Vec3]) -> Vec<f64> {
    v.iter().flat_map(|x| [x.x, x.y, x.z]).collect()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
