//! Synthetic tool-contact sequences on a generator mesh.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::elasticity::{traction_to_nodal, Displacement, ElasticModel, ForceField};
use crate::mesh::TetMesh;
use crate::objective::PointCloud;
use crate::{Error, Result, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseParams {
    /// Two boundary triangles sharing an edge.
    pub tool_triangles: [usize; 2],
    /// Traction direction; defaults to the inward normal of the tool pair.
    pub direction: Option<[f64; 3]>,
    pub steps: usize,
    /// Target mean tool-vertex displacement between successive steps (m).
    pub step_displacement: f64,
    pub sample_count: usize,
    pub seed: u64,
    /// Standard deviation of isotropic Gaussian noise on sampled points (m).
    pub noise_sd: f64,
    /// Triangles visible to the sensor; defaults to the matching region.
    pub visible: Option<Vec<usize>>,
}

impl Default for CaseParams {
    fn default() -> Self {
        CaseParams {
            tool_triangles: [0, 1],
            direction: None,
            steps: 50,
            step_displacement: 1e-3,
            sample_count: 500,
            seed: 0,
            noise_sd: 0.0,
            visible: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseStep {
    /// Uniform traction on the tool triangles (Pa).
    pub traction: Vec3,
    /// Resultant of the applied nodal forces (N).
    pub f_true: Vec3,
    pub cloud: PointCloud,
    pub displacement: Displacement,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCase {
    pub generator_mesh: TetMesh,
    pub tool_triangles: [usize; 2],
    /// Unit traction direction.
    pub direction: Vec3,
    /// Traction magnitude increment per step (Pa).
    pub traction_step: f64,
    pub tool_area: f64,
    pub steps: Vec<CaseStep>,
}

impl SyntheticCase {
    /// Mean rest position of the tool vertices.
    pub fn tool_center(&self) -> Vec3 {
        let verts = self.generator_mesh.triangle_vertices(&self.tool_triangles);
        verts.iter().map(|&v| self.generator_mesh.vertices()[v]).sum::<Vec3>() / verts.len() as f64
    }

    pub fn clouds(&self) -> Vec<PointCloud> {
        self.steps.iter().map(|s| s.cloud.clone()).collect()
    }

    pub fn f_true(&self) -> Vec<Vec3> {
        self.steps.iter().map(|s| s.f_true).collect()
    }
}

fn shared_vertices(a: &[usize; 3], b: &[usize; 3]) -> usize {
    a.iter().filter(|v| b.contains(v)).count()
}

/// Among `candidates`, the triangle whose centroid is nearest `point` and its
/// nearest edge-adjacent neighbour, in that order.
pub fn adjacent_pair_near(mesh: &TetMesh, point: &Vec3, candidates: &[usize]) -> Result<[usize; 2]> {
    let dist = |t: usize| (mesh.triangle_centroid(t) - point).norm_squared();
    let nearest = |set: &mut dyn Iterator<Item = usize>| {
        set.min_by(|&a, &b| dist(a).total_cmp(&dist(b)).then(a.cmp(&b)))
    };
    let first = nearest(&mut candidates.iter().copied())
        .ok_or_else(|| Error::InvalidArgument("no candidate triangles for the tool".into()))?;
    let tris = mesh.boundary_tris();
    let second = nearest(
        &mut candidates
            .iter()
            .copied()
            .filter(|&t| t != first && shared_vertices(&tris[t], &tris[first]) == 2),
    )
    .ok_or_else(|| Error::InvalidArgument(format!("triangle {first} has no adjacent candidate")))?;
    Ok([first, second])
}

fn sample_surface(
    mesh: &TetMesh,
    u: &Displacement,
    tris: &[usize],
    count: usize,
    noise: Option<&Normal<f64>>,
    rng: &mut ChaCha8Rng,
) -> Result<PointCloud> {
    let x = u.deformed_positions(mesh);
    let corners: Vec<[Vec3; 3]> = tris
        .iter()
        .map(|&t| mesh.boundary_tris()[t].map(|v| x[v]))
        .collect();
    let areas: Vec<f64> = corners
        .iter()
        .map(|[a, b, c]| 0.5 * (b - a).cross(&(c - a)).norm())
        .collect();
    let pick = WeightedIndex::new(&areas)
        .map_err(|e| Error::InvalidArgument(format!("cannot sample visible surface: {e}")))?;
    let points = (0..count)
        .map(|_| {
            let [a, b, c] = corners[pick.sample(rng)];
            let (mut r, mut s): (f64, f64) = (rng.random(), rng.random());
            if r + s > 1.0 {
                (r, s) = (1.0 - r, 1.0 - s);
            }
            let mut p = a + (b - a) * r + (c - a) * s;
            if let Some(n) = noise {
                p += Vec3::new(n.sample(rng), n.sample(rng), n.sample(rng));
            }
            p
        })
        .collect();
    PointCloud::new(points)
}

/// Builds a traction ramp on the tool pair, solves each step and samples a
/// cloud from the visible part of the deformed surface.
///
/// The ramp is `t_k = k s d` for `k = 1..=steps`. The increment `s` comes from
/// one calibration solve under unit traction, scaled so the mean tool-vertex
/// displacement per step is `step_displacement`.
pub fn generate_case(model: &ElasticModel, params: &CaseParams) -> Result<SyntheticCase> {
    let mesh = model.mesh();
    let ntri = mesh.boundary_tris().len();
    let [t0, t1] = params.tool_triangles;
    if t0 >= ntri || t1 >= ntri {
        return Err(Error::InvalidArgument("tool triangle id out of range".into()));
    }
    if t0 == t1 || shared_vertices(&mesh.boundary_tris()[t0], &mesh.boundary_tris()[t1]) != 2 {
        return Err(Error::InvalidArgument(format!("tool triangles {t0} and {t1} are not adjacent")));
    }
    let tool = [t0, t1];
    let tool_vertices = mesh.triangle_vertices(&tool);
    if let Some(v) = tool_vertices.iter().find(|v| model.labels().fixed.binary_search(v).is_ok()) {
        return Err(Error::InvalidArgument(format!("tool vertex {v} is fixed")));
    }
    if params.sample_count == 0 {
        return Err(Error::InvalidArgument("sample_count must be positive".into()));
    }
    if !(params.noise_sd >= 0.0) || !(params.step_displacement >= 0.0) {
        return Err(Error::InvalidArgument("noise_sd and step_displacement must be nonnegative".into()));
    }
    let direction = match params.direction {
        Some(d) => Vec3::from(d),
        None => -(mesh.triangle_area_vector(t0) + mesh.triangle_area_vector(t1)),
    };
    let direction = direction
        .try_normalize(0.0)
        .ok_or_else(|| Error::InvalidArgument("traction direction is zero".into()))?;
    let visible = params.visible.as_deref().unwrap_or(&model.labels().matching);
    if visible.is_empty() {
        return Err(Error::InvalidArgument("visible region is empty".into()));
    }

    let nodal = |traction: &Vec3| {
        ForceField::new(traction_to_nodal(mesh, &tool, traction), tool_vertices.clone())
    };
    let traction_step = if params.step_displacement > 0.0 {
        let unit = model.solve_direct(&nodal(&direction)?)?.displacement;
        let mean = tool_vertices.iter().map(|&v| unit.values()[v].norm()).sum::<f64>() / tool_vertices.len() as f64;
        if !(mean > 0.0) {
            return Err(Error::InvalidArgument("tool traction produces no displacement".into()));
        }
        params.step_displacement / mean
    } else {
        0.0
    };

    let noise = (params.noise_sd > 0.0)
        .then(|| Normal::new(0.0, params.noise_sd))
        .transpose()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let tool_area = mesh.triangle_area(t0) + mesh.triangle_area(t1);
    let mut steps = Vec::with_capacity(params.steps);
    for k in 1..=params.steps {
        let traction = direction * (k as f64 * traction_step);
        let b = nodal(&traction)?;
        let u = model.solve_direct(&b)?.displacement;
        let f_true = b.values().iter().sum();
        let cloud = sample_surface(mesh, &u, visible, params.sample_count, noise.as_ref(), &mut rng)?;
        steps.push(CaseStep {
            traction,
            f_true,
            cloud,
            displacement: u,
        });
    }
    Ok(SyntheticCase {
        generator_mesh: mesh.clone(),
        tool_triangles: tool,
        direction,
        traction_step,
        tool_area,
        steps,
    })
}
