mod common;

use elastoreg::mesh::{generate_box_mesh, TetMesh};
use elastoreg::objective::PointCloud;
use elastoreg::rigid::{best_fit_transform, icp_align, read_transform, write_transform, IcpParams, RigidTransform};
use elastoreg::Vec3;
use nalgebra::{Matrix3, Rotation3, UnitQuaternion};
use proptest::prelude::*;
use rand::Rng;

use common::{random_vec, rng};

fn identity_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).map(|i| (i, i)).collect()
}

fn random_points(n: usize, seed: u64) -> PointCloud {
    let mut r = rng(seed);
    PointCloud::new((0..n).map(|_| random_vec(&mut r, 1.0)).collect()).unwrap()
}

fn random_rotation(r: &mut impl Rng, max_angle: f64) -> Matrix3<f64> {
    let axis = nalgebra::Unit::new_normalize(Vec3::new(r.random(), r.random(), r.random()) - Vec3::repeat(0.5));
    *Rotation3::from_axis_angle(&axis, r.random_range(-max_angle..max_angle)).matrix()
}

fn residual(t: &RigidTransform, s: &PointCloud, d: &PointCloud) -> f64 {
    s.points().iter().zip(d.points()).map(|(a, b)| (t.apply(a) - b).norm_squared()).sum()
}

fn assert_valid(t: &RigidTransform) {
    let r = t.rotation();
    assert!((r.transpose() * r - Matrix3::identity()).amax() <= 1e-10);
    assert!(r.determinant() > 0.0);
}

/// Triangle corners, centroids and edge midpoints of every boundary triangle.
fn surface_samples(mesh: &TetMesh) -> Vec<Vec3> {
    let x = mesh.vertices();
    mesh.boundary_tris()
        .iter()
        .flat_map(|&[a, b, c]| {
            [(x[a] + x[b] + x[c]) / 3.0, (x[a] + x[b]) / 2.0, (2.0 * x[a] + x[b] + x[c]) / 4.0]
        })
        .collect()
}

fn phantom() -> TetMesh {
    generate_box_mesh(5, 4, 3, [0.1, 0.08, 0.05]).unwrap()
}

#[test]
fn best_fit_of_identical_clouds_is_identity() {
    let s = random_points(20, 1);
    let t = best_fit_transform(&s, &s, &identity_pairs(20)).unwrap();
    assert!((t.rotation() - Matrix3::identity()).amax() <= 1e-12);
    assert!(t.translation().norm() <= 1e-12);
}

#[test]
fn best_fit_recovers_known_motion() {
    let s = random_points(30, 2);
    let mut r = rng(3);
    for _ in 0..10 {
        let truth = RigidTransform::new(random_rotation(&mut r, 3.0), random_vec(&mut r, 5.0)).unwrap();
        let d = s.map(|p| truth.apply(p));
        let t = best_fit_transform(&s, &d, &identity_pairs(30)).unwrap();
        assert_valid(&t);
        assert!((t.rotation() - truth.rotation()).amax() <= 1e-10);
        assert!((t.translation() - truth.translation()).norm() <= 1e-10);
    }
}

#[test]
fn noisy_fit_beats_random_perturbations() {
    let s = random_points(40, 4);
    let mut r = rng(5);
    let truth = RigidTransform::new(random_rotation(&mut r, 1.0), random_vec(&mut r, 1.0)).unwrap();
    let d = PointCloud::new(s.points().iter().map(|p| truth.apply(p) + random_vec(&mut r, 0.05)).collect()).unwrap();
    let best = best_fit_transform(&s, &d, &identity_pairs(40)).unwrap();
    let e = residual(&best, &s, &d);
    for _ in 0..100 {
        let q = UnitQuaternion::from_matrix(&random_rotation(&mut r, 0.05));
        let perturbed = RigidTransform::new(q.to_rotation_matrix().into_inner() * best.rotation(), *best.translation() + random_vec(&mut r, 0.01)).unwrap();
        assert!(e <= residual(&perturbed, &s, &d));
    }
}

#[test]
fn correspondence_subsets_and_errors() {
    let s = random_points(10, 6);
    let truth = RigidTransform::about_point(&Vec3::x(), 0.4, &Vec3::zeros(), &Vec3::new(0.0, 1.0, 0.0));
    let d = s.map(|p| truth.apply(p));
    let pairs = [(0, 0), (3, 3), (5, 5), (9, 9)];
    let t = best_fit_transform(&s, &d, &pairs).unwrap();
    assert!(t.rotation_angle_to(&truth) <= 1e-10);
    assert!(best_fit_transform(&s, &d, &[(0, 0), (10, 1), (2, 2)]).is_err());
    assert!(best_fit_transform(&s, &d, &[(0, 0), (1, 1)]).is_err());
}

#[test]
fn icp_on_rest_surface_stays_at_identity() {
    let mesh = phantom();
    let cloud = PointCloud::new(surface_samples(&mesh)).unwrap();
    let out = icp_align(&mesh, &cloud, &IcpParams::default()).unwrap();
    assert!(out.mse_history.last().unwrap() <= &1e-12);
    assert!(out.transform.rotation_angle_to(&RigidTransform::identity()) <= 1e-10);
    assert!(out.transform.translation().norm() <= 1e-10);
}

#[test]
fn icp_recovers_small_motion() {
    let mesh = phantom();
    let c = Vec3::new(0.05, 0.04, 0.025);
    for (axis, angle, shift) in [
        (Vec3::new(0.2, 0.3, 1.0), 0.12, Vec3::new(0.004, -0.003, 0.002)),
        (Vec3::new(1.0, -0.5, 0.3), -0.08, Vec3::new(-0.002, 0.001, 0.003)),
    ] {
        let truth = RigidTransform::about_point(&axis, angle, &c, &shift);
        let cloud = PointCloud::new(surface_samples(&mesh).iter().map(|p| truth.apply(p)).collect()).unwrap();
        let out = icp_align(&mesh, &cloud, &IcpParams { max_iters: 500, tol: 0.0 }).unwrap();
        assert_valid(&out.transform);
        let angle_err = out.transform.rotation_angle_to(&truth);
        let shift_err = (out.transform.translation() - truth.translation()).norm();
        assert!(angle_err <= 1e-6 && shift_err <= 1e-8, "{angle_err} rad, {shift_err} m in {} its", out.iterations);
        assert!(out.mse_history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    }
}

#[test]
fn icp_with_zero_iterations_is_identity() {
    let mesh = phantom();
    let shift = RigidTransform::about_point(&Vec3::z(), 0.1, &Vec3::zeros(), &Vec3::x());
    let cloud = PointCloud::new(surface_samples(&mesh).iter().map(|p| shift.apply(p)).collect()).unwrap();
    let out = icp_align(&mesh, &cloud, &IcpParams { max_iters: 0, tol: 1e-10 }).unwrap();
    assert_eq!(out.transform, RigidTransform::identity());
    assert_eq!(out.iterations, 0);
    assert_eq!(out.mse_history.len(), 1);
}

#[test]
fn transform_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.toml");
    let t = RigidTransform::about_point(&Vec3::new(1.0, 2.0, 3.0), 0.77, &Vec3::new(0.1, 0.2, 0.3), &Vec3::new(-4.0, 5.0, 6.0));
    write_transform(&t, &path).unwrap();
    assert_eq!(read_transform(&path).unwrap(), t);
    std::fs::write(&path, "values = [1, 0, 0, 0, 1, 0, 0, 0, -1, 0, 0, 0]\n").unwrap();
    assert!(read_transform(&path).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn icp_error_never_increases(seed in 0u64..1000) {
        let mesh = generate_box_mesh(3, 2, 2, [0.1, 0.08, 0.05]).unwrap();
        let mut r = rng(seed);
        let truth = RigidTransform::new(random_rotation(&mut r, 0.3), random_vec(&mut r, 0.01)).unwrap();
        let cloud = PointCloud::new(
            surface_samples(&mesh).iter().map(|p| truth.apply(p) + random_vec(&mut r, 1e-3)).collect(),
        ).unwrap();
        let out = icp_align(&mesh, &cloud, &IcpParams { max_iters: 30, tol: 1e-10 }).unwrap();
        assert_valid(&out.transform);
        prop_assert!(out.mse_history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    }
}
