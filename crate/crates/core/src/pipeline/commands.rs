//! Config-driven drivers behind the CLI subcommands.

use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use crate::control::ControlProblem;
use crate::elasticity::{ElasticModel, ForceField};
use crate::mesh::io::{format_vtk, read_mesh, write_labels, write_mesh, write_text};
use crate::mesh::{generate_box_mesh, nearest_boundary_vertices};
use crate::objective::{read_cloud, write_xyz, PointCloud};
use crate::rigid::{icp_align, write_transform, IcpOutcome};
use crate::{Error, Result, Vec3};

use super::bundle::{create_dir, format_plot_data, read_case, write_case, write_json};
use super::config::{resolve, CaseConfig, CheckGradConfig, EstimateConfig, GenMeshConfig, IcpConfig, RegisterConfig, ToolSpec};
use super::estimate::{estimate_sequence, SequenceEstimate};
use super::gradcheck::{gradient_audit, GradientAudit};
use super::register::{register, RegistrationOutcome};
use super::synthetic::{adjacent_pair_near, generate_case, CaseParams, SyntheticCase};

pub fn run_gen_mesh(cfg: &GenMeshConfig, base: &Path) -> Result<crate::mesh::TetMesh> {
    let [nx, ny, nz] = cfg.cells;
    let mesh = generate_box_mesh(nx, ny, nz, cfg.lengths)?;
    write_mesh(&mesh, &resolve(base, &cfg.mesh_out))?;
    match (&cfg.labels, &cfg.labels_out) {
        (Some(sel), Some(out)) => write_labels(&sel.apply(&mesh)?, &resolve(base, out))?,
        (None, None) => {}
        _ => return Err(Error::Config("labels and labels_out must be given together".into())),
    }
    Ok(mesh)
}

pub fn run_gen_case(cfg: &CaseConfig, base: &Path) -> Result<SyntheticCase> {
    let model = cfg.model.build(base)?;
    let tool_triangles = match cfg.tool {
        ToolSpec::Triangles { tool_triangles } => tool_triangles,
        ToolSpec::Point { tool_point } => {
            adjacent_pair_near(model.mesh(), &Vec3::from(tool_point), &model.labels().loaded)?
        }
    };
    let visible = cfg.visible.as_ref().map(|s| s.select(model.mesh())).transpose()?;
    let params = CaseParams {
        tool_triangles,
        direction: cfg.direction,
        steps: cfg.steps,
        step_displacement: cfg.step_displacement,
        sample_count: cfg.sample_count,
        seed: cfg.seed,
        noise_sd: cfg.noise_sd,
        visible,
    };
    let case = generate_case(&model, &params)?;
    write_case(&case, &resolve(base, &cfg.out_dir))?;
    Ok(case)
}

#[derive(Serialize)]
struct SequenceTiming {
    update_times: Vec<f64>,
    mean_update_time: f64,
}

pub fn run_estimate(cfg: &EstimateConfig, base: &Path) -> Result<SequenceEstimate> {
    let case = read_case(&resolve(base, &cfg.case_dir))?;
    let model = cfg.model.build(base)?;
    let loaded = model.labels().loaded_vertices(model.mesh());
    let zone = nearest_boundary_vertices(model.mesh(), &case.tool_center(), cfg.control_zone_size, &loaded);
    let mesh = model.mesh().clone();
    let est = estimate_sequence(&case, model, &zone, &cfg.optimizer)?;

    let out = resolve(base, &cfg.out_dir);
    create_dir(&out)?;
    write_json(&est.records, &out.join("records.json"))?;
    write_text(&out.join("plot.tsv"), &format_plot_data(&est.records))?;
    write_json(&est.final_force, &out.join("final_force.json"))?;
    write_text(&out.join("final_deformed.vtk"), &format_vtk(&mesh, Some(est.final_displacement.values())))?;
    let times: Vec<f64> = est.records.iter().map(|r| r.update_time).collect();
    let timing = SequenceTiming {
        mean_update_time: times.iter().sum::<f64>() / times.len() as f64,
        update_times: times,
    };
    write_json(&timing, &out.join("timing.json"))?;
    Ok(est)
}

#[derive(Serialize)]
struct CloudTiming<'a> {
    name: &'a str,
    wall_time: f64,
}

/// Registers every configured cloud in a worker pool; outputs go to
/// `out_dir/<cloud file stem>/`.
pub fn run_register(cfg: &RegisterConfig, base: &Path) -> Result<Vec<(String, RegistrationOutcome)>> {
    if cfg.clouds.is_empty() {
        return Err(Error::Config("no clouds to register".into()));
    }
    let (mesh, labels) = cfg.model.load(base)?;
    let mut names: Vec<String> = cfg
        .clouds
        .iter()
        .map(|p| p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default())
        .collect();
    let mut sorted = names.clone();
    sorted.sort();
    sorted.dedup();
    if sorted.len() != names.len() || names.iter().any(String::is_empty) {
        return Err(Error::Config("cloud file stems must be unique and nonempty".into()));
    }
    let out = resolve(base, &cfg.out_dir);
    create_dir(&out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let jobs: Vec<(String, &Path)> = names.drain(..).zip(cfg.clouds.iter().map(|p| p.as_path())).collect();
    let results: Vec<Result<(String, RegistrationOutcome, f64)>> = pool.install(|| {
        jobs.par_iter()
            .map(|(name, path)| {
                let start = Instant::now();
                let cloud = read_cloud(&resolve(base, path))?;
                let model = ElasticModel::with_options(mesh.clone(), cfg.model.material, labels.clone(), cfg.model.solver)?;
                let outcome = register(model, &cloud, &cfg.registration)?;
                let dir = out.join(name);
                create_dir(&dir)?;
                write_transform(&outcome.transform, &dir.join("transform.toml"))?;
                write_json(&outcome.force, &dir.join("force.json"))?;
                write_json(&outcome.report, &dir.join("report.json"))?;
                let aligned = mesh.map_vertices(|x| outcome.transform.apply(x))?;
                let rotated: Vec<Vec3> = outcome
                    .displacement
                    .values()
                    .iter()
                    .map(|u| outcome.transform.rotation() * u)
                    .collect();
                write_text(&dir.join("deformed.vtk"), &format_vtk(&aligned, Some(&rotated)))?;
                write_xyz(&PointCloud::new(outcome.deformed_vertices(&mesh))?, &dir.join("deformed_vertices.xyz"))?;
                Ok((name.clone(), outcome, start.elapsed().as_secs_f64()))
            })
            .collect()
    });
    let results = results.into_iter().collect::<Result<Vec<_>>>()?;
    let timing: Vec<CloudTiming> = results
        .iter()
        .map(|(name, _, t)| CloudTiming { name, wall_time: *t })
        .collect();
    write_json(&timing, &out.join("timing.json"))?;
    Ok(results.into_iter().map(|(n, o, _)| (n, o)).collect())
}

pub fn run_icp(cfg: &IcpConfig, base: &Path) -> Result<IcpOutcome> {
    let mesh = read_mesh(&resolve(base, &cfg.mesh))?;
    let cloud = read_cloud(&resolve(base, &cfg.cloud))?;
    let outcome = icp_align(&mesh, &cloud, &cfg.icp)?;
    write_transform(&outcome.transform, &resolve(base, &cfg.transform_out))?;
    Ok(outcome)
}

/// Audits the gradient at a random control. Without a configured cloud, the
/// observation is the deformed matching surface (triangle centroids) under a
/// second random control.
pub fn run_check_grad(cfg: &CheckGradConfig, base: &Path) -> Result<GradientAudit> {
    let model = cfg.model.build(base)?;
    let support = model.labels().loaded_vertices(model.mesh());
    let n = model.mesh().vertex_count();
    let normal = Normal::new(0.0, cfg.force_scale).map_err(|e| Error::Config(format!("force_scale: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.audit.seed);
    let random_control = |rng: &mut ChaCha8Rng| {
        let x: Vec<f64> = (0..3 * support.len()).map(|_| normal.sample(rng)).collect();
        ForceField::from_control(n, &support, &x)
    };
    let reference = random_control(&mut rng);
    let at = random_control(&mut rng);
    let cloud = match &cfg.cloud {
        Some(p) => read_cloud(&resolve(base, p))?,
        None => {
            let u = model.solve_direct(&reference)?.displacement;
            let x = u.deformed_positions(model.mesh());
            let pts = model
                .labels()
                .matching
                .iter()
                .map(|&t| model.mesh().boundary_tris()[t].iter().map(|&v| x[v]).sum::<Vec3>() / 3.0)
                .collect();
            PointCloud::new(pts)?
        }
    };
    let problem = ControlProblem::new(model, cloud)?;
    let audit = gradient_audit(&problem, &at, &cfg.audit)?;
    if let Some(p) = &cfg.report_out {
        write_json(&audit, &resolve(base, p))?;
    }
    Ok(audit)
}
