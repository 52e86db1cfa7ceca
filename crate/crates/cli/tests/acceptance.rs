//! Acceptance suite: one PASS/FAIL line per criterion, then a hard assert.
//!
//! Run with `cargo test -p elastoreg-cli --test acceptance -- --nocapture`.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use elastoreg::control::{
    minimize, objective_and_gradient, ControlProblem, GradientReference, OptimizerParams,
};
use elastoreg::elasticity::{Displacement, ElasticModel, ForceField, MaterialModel};
use elastoreg::mesh::{generate_box_mesh, nearest_boundary_vertices, RegionLabels, RegionSelector, TetMesh};
use elastoreg::objective::PointCloud;
use elastoreg::pipeline::config::LabelSelectors;
use elastoreg::pipeline::{
    adjacent_pair_near, estimate_sequence, generate_case, gradient_audit, interpolate, locate_point, register,
    AuditParams, CaseParams, RegistrationParams,
};
use elastoreg::rigid::{icp_align, IcpParams, RigidTransform};
use elastoreg::Vec3;

const LENGTHS: [f64; 3] = [0.1, 0.08, 0.05];

// criterion 1
const AUDIT_TOL_LINEAR: f64 = 1e-5;
const AUDIT_TOL_SVK: f64 = 1e-4;
const AUDIT_SECONDS: f64 = 10.0;
// criterion 2
const STATIONARITY_TOL: f64 = 1e-8;
// criterion 3
const SAME_MESH_MEAN_ERROR: f64 = 0.02;
// criterion 4
const CROSS_MESH_MEAN_ERROR: f64 = 0.20;
const CROSS_MESH_MEAN_EVALS: f64 = 15.0;
const CROSS_MESH_SECONDS: f64 = 300.0;
// criterion 5
const TARGET_ERROR_OF_DIAMETER: f64 = 0.05;
const TARGET_ERROR_OF_DEFORMATION: f64 = 0.25;
const TARGET_COUNT: usize = 159;
// criterion 6
const ICP_MAX_ANGLE: f64 = std::f64::consts::PI / 6.0;
const ICP_ROTATION_TOL: f64 = 1e-6;
const ICP_TRANSLATION_TOL: f64 = 1e-8;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn box_face(axis: usize, max: bool) -> RegionSelector {
    RegionSelector::BoxFace { axis, max, tol: 1e-9 }
}

/// Bottom clamped, top loaded and observed.
fn top_labels(mesh: &TetMesh) -> RegionLabels {
    LabelSelectors { matching: box_face(2, true), loaded: box_face(2, true), fixed: box_face(2, false) }
        .apply(mesh)
        .unwrap()
}

fn desk_model(cells: [usize; 3], material: MaterialModel) -> ElasticModel {
    let mesh = generate_box_mesh(cells[0], cells[1], cells[2], LENGTHS).unwrap();
    let labels = top_labels(&mesh);
    ElasticModel::new(mesh, material, labels).unwrap()
}

fn soft_linear() -> MaterialModel {
    MaterialModel::linear(20000.0, 0.45).unwrap()
}

fn random_control(model: &ElasticModel, scale: f64, rng: &mut ChaCha8Rng) -> ForceField {
    let support = model.labels().loaded_vertices(model.mesh());
    let c: Vec<f64> = (0..3 * support.len()).map(|_| rng.random_range(-scale..scale)).collect();
    ForceField::from_control(model.mesh().vertex_count(), &support, &c)
}

/// Area-weighted uniform samples of `tris` on the surface deformed by `u`.
fn sample(mesh: &TetMesh, u: &Displacement, tris: &[usize], count: usize, rng: &mut ChaCha8Rng) -> Vec<Vec3> {
    let x = u.deformed_positions(mesh);
    let corners: Vec<[Vec3; 3]> = tris.iter().map(|&t| mesh.boundary_tris()[t].map(|v| x[v])).collect();
    let areas: Vec<f64> = corners.iter().map(|[a, b, c]| (b - a).cross(&(c - a)).norm()).collect();
    let pick = WeightedIndex::new(&areas).unwrap();
    (0..count)
        .map(|_| {
            let [a, b, c] = corners[pick.sample(rng)];
            let (mut r, mut s): (f64, f64) = (rng.random(), rng.random());
            if r + s > 1.0 {
                (r, s) = (1.0 - r, 1.0 - s);
            }
            a + (b - a) * r + (c - a) * s
        })
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn gradient_audit_criterion() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = Vec::new();
    for (material, tol) in [
        (soft_linear(), AUDIT_TOL_LINEAR),
        (MaterialModel::st_venant_kirchhoff(20000.0, 0.45).unwrap(), AUDIT_TOL_SVK),
    ] {
        let model = desk_model([8, 6, 4], material);
        let truth = random_control(&model, 0.05, &mut rng);
        let u = model.solve_direct(&truth).unwrap().displacement;
        let cloud = PointCloud::new(sample(model.mesh(), &u, &model.labels().matching, 500, &mut rng)).unwrap();
        let b = random_control(&model, 0.05, &mut rng);
        let problem = ControlProblem::new(model, cloud).unwrap();
        let params = AuditParams { directions: 10, seed: 2, tolerance: tol, ..Default::default() };
        let audit = gradient_audit(&problem, &b, &params).unwrap();
        worst.push((audit.max_relative_error, tol, problem.model().mesh().vertex_count()));
    }
    let secs = start.elapsed().as_secs_f64();
    let passed = worst.iter().all(|(e, tol, _)| e <= tol) && secs < AUDIT_SECONDS;
    outcome(
        passed,
        format!(
            "{} vertices; max rel error linear {:.2e} (<= {:.0e}), svk {:.2e} (<= {:.0e}); {secs:.2} s",
            worst[0].2, worst[0].0, worst[0].1, worst[1].0, worst[1].1
        ),
    )
}

fn stationarity_criterion() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let model = desk_model([8, 6, 4], soft_linear());
    let truth = random_control(&model, 0.05, &mut rng);
    let u = model.solve_direct(&truth).unwrap().displacement;
    let cloud = PointCloud::new(sample(model.mesh(), &u, &model.labels().matching, 500, &mut rng)).unwrap();
    let problem = ControlProblem::new(model, cloud).unwrap();
    let (_, g) = objective_and_gradient(&problem, &truth).unwrap();
    let (_, g0) = objective_and_gradient(&problem, &problem.zero_control()).unwrap();
    let ratio = g.norm() / g0.norm();
    outcome(ratio <= STATIONARITY_TOL, format!("|grad(b*)| / |grad(0)| = {ratio:.2e} (<= {STATIONARITY_TOL:.0e})"))
}

/// A tool-contact sequence on the generator, estimated on `recon`.
struct SequenceRun {
    errors: Vec<f64>,
    evaluations: Vec<f64>,
    update_times: Vec<f64>,
}

fn run_sequence(
    generator: &ElasticModel,
    recon: ElasticModel,
    tool_point: Vec3,
    direction: Option<[f64; 3]>,
    steps: usize,
    seed: u64,
    params: &OptimizerParams,
) -> SequenceRun {
    let top = generator.labels().loaded.clone();
    let tool = adjacent_pair_near(generator.mesh(), &tool_point, &top).unwrap();
    let case_params = CaseParams { tool_triangles: tool, direction, steps, seed, ..Default::default() };
    let case = generate_case(generator, &case_params).unwrap();
    let loaded = recon.labels().loaded_vertices(recon.mesh());
    let zone = nearest_boundary_vertices(recon.mesh(), &case.tool_center(), 50, &loaded);
    let est = estimate_sequence(&case, recon, &zone, params).unwrap();
    SequenceRun {
        errors: est.records.iter().map(|r| r.relative_error.unwrap()).collect(),
        evaluations: est.records.iter().map(|r| r.evaluations as f64).collect(),
        update_times: est.records.iter().map(|r| r.update_time).collect(),
    }
}

fn same_mesh_criterion() -> Outcome {
    let model = desk_model([8, 6, 4], soft_linear());
    let recon = desk_model([8, 6, 4], soft_linear());
    let params = OptimizerParams {
        grad_rtol: 1e-6,
        grad_reference: GradientReference::ZeroControl,
        memory: 40,
        max_iters: 1000,
        ..Default::default()
    };
    let run = run_sequence(&model, recon, Vec3::new(0.05, 0.04, 0.05), None, 10, 4, &params);
    let e = mean(&run.errors);
    outcome(e <= SAME_MESH_MEAN_ERROR, format!("10 steps, mean relative error {:.3} % (<= 2 %)", 100.0 * e))
}

fn cross_mesh_criterion() -> (Outcome, String) {
    let start = Instant::now();
    let generator = desk_model([12, 10, 6], soft_linear());
    let params = OptimizerParams {
        grad_rtol: 5e-4,
        grad_reference: GradientReference::ZeroControl,
        memory: 80,
        ..Default::default()
    };
    let cases = [
        (Vec3::new(0.05, 0.04, 0.05), None),
        (Vec3::new(0.03, 0.05, 0.05), Some([0.3, 0.2, -1.0])),
        (Vec3::new(0.065, 0.03, 0.05), None),
    ];
    let mut errors = Vec::new();
    let mut evals = Vec::new();
    let mut times = Vec::new();
    let mut per_case = Vec::new();
    for (k, (point, dir)) in cases.iter().enumerate() {
        let recon = desk_model([14, 12, 7], soft_linear());
        let run = run_sequence(&generator, recon, *point, *dir, 50, 10 + k as u64, &params);
        per_case.push(format!("{:.1} % / {:.1} evals", 100.0 * mean(&run.errors), mean(&run.evaluations)));
        errors.extend(run.errors);
        evals.extend(run.evaluations);
        times.extend(run.update_times);
    }
    let secs = start.elapsed().as_secs_f64();
    let (e, n) = (mean(&errors), mean(&evals));
    let passed = e <= CROSS_MESH_MEAN_ERROR && n <= CROSS_MESH_MEAN_EVALS && secs < CROSS_MESH_SECONDS;
    let info = format!(
        "mean update time {:.3} s (informational; hardware dependent)",
        mean(&times)
    );
    (
        outcome(
            passed,
            format!(
                "3 x 50 steps, mean relative error {:.1} % (<= 20 %), mean evaluations {n:.2} (<= 15), {secs:.1} s; per case [{}]",
                100.0 * e,
                per_case.join(", ")
            ),
        ),
        info,
    )
}

/// Labels of the registration phantom: a small clamp at the bottom center,
/// the rest of the bottom loaded, every other face observable.
fn registration_labels(mesh: &TetMesh) -> RegionLabels {
    LabelSelectors {
        matching: RegionSelector::Difference { base: Box::new(RegionSelector::All), remove: Box::new(box_face(2, false)) },
        loaded: box_face(2, false),
        fixed: RegionSelector::Nearest { point: [0.05, 0.04, 0.0], count: 6 },
    }
    .apply(mesh)
    .unwrap()
}

fn registration_model(cells: [usize; 3]) -> ElasticModel {
    let mesh = generate_box_mesh(cells[0], cells[1], cells[2], LENGTHS).unwrap();
    let labels = registration_labels(&mesh);
    ElasticModel::new(mesh, MaterialModel::linear(1.0, 0.4).unwrap(), labels).unwrap()
}

/// Smooth traction over the loaded region, lumped to the vertices.
fn phantom_load(model: &ElasticModel, amplitude: f64) -> ForceField {
    let mesh = model.mesh();
    let mut values = vec![Vec3::zeros(); mesh.vertex_count()];
    for &t in &model.labels().loaded {
        let c = mesh.triangle_centroid(t);
        let (sx, sy) = (c.x / LENGTHS[0], c.y / LENGTHS[1]);
        let traction = Vec3::new(0.3 * (sy - 0.5), -0.2 * (sx - 0.5), 1.0 + 0.5 * sx) * amplitude;
        for &v in &mesh.boundary_tris()[t] {
            values[v] += traction * mesh.triangle_area(t) / 3.0;
        }
    }
    ForceField::new(values, model.labels().loaded_vertices(mesh)).unwrap()
}

struct TargetErrors {
    error: f64,
    deformation: f64,
}

fn target_errors(
    generator: &TetMesh,
    truth: &Displacement,
    recon: &TetMesh,
    estimate: &Displacement,
    map_truth: &RigidTransform,
    map_estimate: &RigidTransform,
    rng: &mut ChaCha8Rng,
) -> TargetErrors {
    let (mut error, mut deformation) = (0.0, 0.0);
    for _ in 0..TARGET_COUNT {
        let p = Vec3::new(
            LENGTHS[0] * rng.random_range(0.1..0.9),
            LENGTHS[1] * rng.random_range(0.1..0.9),
            LENGTHS[2] * rng.random_range(0.1..0.9),
        );
        let ut = interpolate(generator, truth, &locate_point(generator, &p).unwrap());
        let ue = interpolate(recon, estimate, &locate_point(recon, &p).unwrap());
        error += (map_truth.apply(&(p + ut)) - map_estimate.apply(&(p + ue))).norm();
        deformation += ut.norm();
    }
    TargetErrors { error: error / TARGET_COUNT as f64, deformation: deformation / TARGET_COUNT as f64 }
}

fn registration_criterion() -> (Outcome, String) {
    let generator = registration_model([14, 12, 7]);
    let truth = generator.solve_direct(&phantom_load(&generator, 0.01)).unwrap().displacement;
    let diameter = generator.mesh().diameter();
    let observable = registration_labels(generator.mesh()).matching;
    let params = RegistrationParams {
        skip_rigid: true,
        optimizer: OptimizerParams { grad_rtol: 1e-300, max_iters: 200, ..Default::default() },
        ..Default::default()
    };
    let full = RegistrationParams { skip_rigid: false, ..params.clone() };
    let offset = RigidTransform::about_point(
        &Vec3::new(0.3, 1.0, 0.2),
        0.1,
        &Vec3::new(0.05, 0.04, 0.025),
        &Vec3::new(0.01, -0.005, 0.02),
    );
    let identity = RigidTransform::identity();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_diam: f64 = 0.0;
    let mut worst_def: f64 = 0.0;
    let mut lines = Vec::new();
    let mut info = Vec::new();
    for coverage in [0.2, 0.3, 0.44] {
        let visible = RegionSelector::Sweep {
            direction: [0.0, -0.3, 1.0],
            area_fraction: coverage,
            within: Box::new(RegionSelector::Difference {
                base: Box::new(RegionSelector::All),
                remove: Box::new(box_face(2, false)),
            }),
        }
        .select(generator.mesh())
        .unwrap();
        assert!(visible.iter().all(|t| observable.contains(t)));
        let points = sample(generator.mesh(), &truth, &visible, 500, &mut rng);

        let out = register(registration_model([10, 8, 5]), &PointCloud::new(points.clone()).unwrap(), &params).unwrap();
        let recon = out.displacement;
        let mesh = registration_model([10, 8, 5]).mesh().clone();
        let t = target_errors(generator.mesh(), &truth, &mesh, &recon, &identity, &identity, &mut rng);
        let (d, f) = (t.error / diameter, t.error / t.deformation);
        worst_diam = worst_diam.max(d);
        worst_def = worst_def.max(f);
        lines.push(format!("{:.0} %: {:.2} % diam, {:.1} % deform", 100.0 * coverage, 100.0 * d, 100.0 * f));

        // full protocol in an offset frame, reported only
        let moved = PointCloud::new(points.iter().map(|p| offset.apply(p)).collect()).unwrap();
        let out = register(registration_model([10, 8, 5]), &moved, &full).unwrap();
        let t = target_errors(generator.mesh(), &truth, &mesh, &out.displacement, &offset, &out.transform, &mut rng);
        let zero = Displacement::zeros(mesh.vertex_count());
        let r = target_errors(generator.mesh(), &truth, &mesh, &zero, &offset, &out.transform, &mut rng);
        info.push(format!(
            "{:.0} %: icp+elastic {:.1} % deform, icp only {:.1} % deform",
            100.0 * coverage,
            100.0 * t.error / t.deformation,
            100.0 * r.error / r.deformation
        ));
    }
    let passed = worst_diam <= TARGET_ERROR_OF_DIAMETER && worst_def <= TARGET_ERROR_OF_DEFORMATION;
    (
        outcome(
            passed,
            format!("{TARGET_COUNT} targets, 200 iterations, known pose; {} (<= 5 % diam, <= 25 % deform)", lines.join("; ")),
        ),
        format!("full protocol with rigid offset (informational): {}", info.join("; ")),
    )
}

fn icp_criterion() -> Outcome {
    let mesh = generate_box_mesh(10, 8, 5, LENGTHS).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let all: Vec<usize> = (0..mesh.boundary_tris().len()).collect();
    let samples = sample(&mesh, &Displacement::zeros(mesh.vertex_count()), &all, 1500, &mut rng);
    let center = Vec3::new(0.05, 0.04, 0.025);
    let (mut worst_rot, mut worst_shift): (f64, f64) = (0.0, 0.0);
    let trials = 10;
    for _ in 0..trials {
        let axis = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let angle = rng.random_range(-ICP_MAX_ANGLE..ICP_MAX_ANGLE);
        let shift = Vec3::new(rng.random_range(-0.01..0.01), rng.random_range(-0.01..0.01), rng.random_range(-0.01..0.01));
        let truth = RigidTransform::about_point(&axis, angle, &center, &shift);
        let cloud = PointCloud::new(samples.iter().map(|p| truth.apply(p)).collect()).unwrap();
        let out = icp_align(&mesh, &cloud, &IcpParams { max_iters: 500, tol: 0.0 }).unwrap();
        worst_rot = worst_rot.max(out.transform.rotation_angle_to(&truth));
        worst_shift = worst_shift.max((out.transform.translation() - truth.translation()).norm());
    }
    outcome(
        worst_rot <= ICP_ROTATION_TOL && worst_shift <= ICP_TRANSLATION_TOL,
        format!(
            "{trials} random poses up to 30 deg; worst rotation error {worst_rot:.1e} rad (<= 1e-6), translation {worst_shift:.1e} m (<= 1e-8)"
        ),
    )
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_elastoreg")
}

fn cli(dir: &Path, args: &[&str]) {
    let status = Command::new(bin()).current_dir(dir).args(args).output().unwrap();
    assert!(status.status.success(), "{args:?}: {}", String::from_utf8_lossy(&status.stderr));
}

/// Every file under `dir` except timing reports, keyed by relative path.
fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().unwrap() != "timing.json" {
                files.push((p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

fn determinism_criterion() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/desk");
    for entry in std::fs::read_dir(&configs).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "toml") {
            std::fs::copy(&p, dir.join(p.file_name().unwrap())).unwrap();
        }
    }
    cli(dir, &["gen-mesh", "-c", "generator_mesh.toml"]);
    cli(dir, &["gen-mesh", "-c", "recon_mesh.toml"]);
    cli(dir, &["gen-case", "-c", "case.toml", "--steps", "20"]);
    for run in ["a", "b"] {
        cli(dir, &["estimate-seq", "-c", "estimate.toml", "--out-dir", &format!("out/{run}/estimate")]);
        cli(dir, &["register", "-c", "register.toml", "--out-dir", &format!("out/{run}/register"), "--threads", "2"]);
    }
    let a = snapshot(&dir.join("out/a"));
    let b = snapshot(&dir.join("out/b"));
    let bytes: usize = a.iter().map(|(_, d)| d.len()).sum();
    outcome(
        !a.is_empty() && a == b,
        format!("estimate-seq + register twice: {} files, {bytes} bytes, identical = {}", a.len(), a == b),
    )
}

fn cost_criterion() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let model = desk_model([8, 6, 4], soft_linear());
    let truth = random_control(&model, 0.05, &mut rng);
    let cloud = PointCloud::new(sample(model.mesh(), &model.solve_direct(&truth).unwrap().displacement, &model.labels().matching, 500, &mut rng)).unwrap();
    let problem = ControlProblem::new(model, cloud)
        .unwrap()
        .with_params(OptimizerParams { max_iters: 20, ..Default::default() })
        .unwrap();
    // nonzero start: a zero load needs no linear solve at all
    let b0 = random_control(problem.model(), 0.01, &mut rng);
    let before = problem.model().stats();
    let out = minimize(&problem, &b0).unwrap();
    let after = problem.model().stats();
    let direct = after.direct_solves - before.direct_solves;
    let adjoint = after.adjoint_solves - before.adjoint_solves;
    let linear = after.linear_solves - before.linear_solves;
    let evals = out.report.evaluations;
    let passed = direct == evals && adjoint == evals && linear == 2 * evals && after.factorizations == 1;
    outcome(
        passed,
        format!(
            "{} iterations, {evals} evaluations: {direct} direct + {adjoint} adjoint solves, {linear} triangular solve pairs, {} factorization(s) in total",
            out.report.iterations, after.factorizations
        ),
    )
}

#[test]
fn acceptance_suite() {
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    let mut info = Vec::new();
    results.push(("1 gradient audit", gradient_audit_criterion()));
    results.push(("2 stationarity", stationarity_criterion()));
    results.push(("3 same-mesh round trip", same_mesh_criterion()));
    let (c4, i4) = cross_mesh_criterion();
    results.push(("4 cross-mesh estimation", c4));
    info.push(i4);
    let (c5, i5) = registration_criterion();
    results.push(("5 registration proxy", c5));
    info.push(i5);
    results.push(("6 icp recovery", icp_criterion()));
    results.push(("7 cli determinism", determinism_criterion()));
    results.push(("8 solve cost", cost_criterion()));

    for (name, o) in &results {
        println!("{} criterion {name}: {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
    }
    for line in &info {
        println!("INFO {line}");
    }
    let failed: Vec<&str> = results.iter().filter(|(_, o)| !o.passed).map(|(n, _)| *n).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

/// Criterion 4 under the default stopping rule (reference ‖∇Φ(b0)‖ at the
/// warm start, memory 10). Slow; prints its numbers and gates nothing.
#[test]
#[ignore]
fn cross_mesh_with_initial_gradient_reference() {
    let generator = desk_model([12, 10, 6], soft_linear());
    let recon = desk_model([14, 12, 7], soft_linear());
    let params = OptimizerParams::default();
    let run = run_sequence(&generator, recon, Vec3::new(0.05, 0.04, 0.05), None, 50, 10, &params);
    println!(
        "INFO initial-gradient reference: mean relative error {:.1} %, mean evaluations {:.1}",
        100.0 * mean(&run.errors),
        mean(&run.evaluations)
    );
}
