//! Rigid pre-alignment: Kabsch best fit and point-to-surface ICP.

use std::path::Path;

use nalgebra::{Matrix3, Rotation3};
use serde::{Deserialize, Serialize};

use crate::elasticity::Displacement;
use crate::mesh::TetMesh;
use crate::objective::{PointCloud, SurfaceProjector};
use crate::{Error, Result, Vec3};

const ORTHO_TOL: f64 = 1e-10;

/// `x ↦ R x + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    rotation: Matrix3<f64>,
    translation: Vec3,
}

#[derive(Serialize, Deserialize)]
struct TransformFile {
    /// Row-major rotation followed by the translation.
    values: Vec<f64>,
}

impl RigidTransform {
    pub fn identity() -> Self {
        RigidTransform {
            rotation: Matrix3::identity(),
            translation: Vec3::zeros(),
        }
    }

    /// Fails unless `rotation` is orthogonal with positive determinant.
    pub fn new(rotation: Matrix3<f64>, translation: Vec3) -> Result<Self> {
        let defect = (rotation.transpose() * rotation - Matrix3::identity()).amax();
        if !(defect <= ORTHO_TOL) || !(rotation.determinant() > 0.0) || !translation.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "not a proper rotation (orthogonality defect {defect:e})"
            )));
        }
        Ok(RigidTransform { rotation, translation })
    }

    /// Rotation by `angle` about `axis` through `center`, then `shift`.
    pub fn about_point(axis: &Vec3, angle: f64, center: &Vec3, shift: &Vec3) -> Self {
        let r = Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(*axis), angle).into_inner();
        RigidTransform {
            rotation: r,
            translation: center - r * center + shift,
        }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vec3 {
        &self.translation
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        RigidTransform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &RigidTransform) -> Self {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    /// Angle of the relative rotation `Rᵀ R_other`, in radians.
    pub fn rotation_angle_to(&self, other: &RigidTransform) -> f64 {
        let rel = self.rotation.transpose() * other.rotation;
        // arccos is ill-conditioned near 0; use the skew part as well
        let skew = Vec3::new(rel[(2, 1)] - rel[(1, 2)], rel[(0, 2)] - rel[(2, 0)], rel[(1, 0)] - rel[(0, 1)]);
        (0.5 * skew.norm()).atan2(0.5 * (rel.trace() - 1.0))
    }

    #[rustfmt::skip]
    pub fn to_array(&self) -> [f64; 12] {
        let r = &self.rotation;
        let t = &self.translation;
        [
            r[(0, 0)], r[(0, 1)], r[(0, 2)],
            r[(1, 0)], r[(1, 1)], r[(1, 2)],
            r[(2, 0)], r[(2, 1)], r[(2, 2)],
            t.x, t.y, t.z,
        ]
    }

    pub fn from_array(v: &[f64]) -> Result<Self> {
        if v.len() != 12 {
            return Err(Error::InvalidArgument(format!("transform needs 12 values, got {}", v.len())));
        }
        RigidTransform::new(Matrix3::from_row_slice(&v[..9]), Vec3::new(v[9], v[10], v[11]))
    }
}

pub fn write_transform(t: &RigidTransform, path: &Path) -> Result<()> {
    let text = toml::to_string(&TransformFile { values: t.to_array().to_vec() })
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    crate::mesh::io::write_text(path, &text)
}

pub fn read_transform(path: &Path) -> Result<RigidTransform> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: TransformFile = toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    RigidTransform::from_array(&file.values)
}

/// Least-squares rigid map taking `source[i]` onto `target[j]` for each
/// `(i, j)` in `correspondences`.
pub fn best_fit_transform(
    source: &PointCloud,
    target: &PointCloud,
    correspondences: &[(usize, usize)],
) -> Result<RigidTransform> {
    let (s, t): (Vec<Vec3>, Vec<Vec3>) = correspondences
        .iter()
        .map(|&(i, j)| {
            let s = source.points().get(i).copied();
            let t = target.points().get(j).copied();
            s.zip(t)
                .ok_or_else(|| Error::InvalidArgument(format!("correspondence ({i}, {j}) out of range")))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();
    fit_pairs(&s, &t)
}

/// Kabsch fit of paired points with a reflection guard.
pub(crate) fn fit_pairs(source: &[Vec3], target: &[Vec3]) -> Result<RigidTransform> {
    let n = source.len();
    if n < 3 || target.len() != n {
        return Err(Error::Degenerate(format!("need at least 3 correspondence pairs, got {n}")));
    }
    let cs = source.iter().sum::<Vec3>() / n as f64;
    let ct = target.iter().sum::<Vec3>() / n as f64;
    let mut h = Matrix3::zeros();
    let mut spread = Matrix3::zeros();
    for (s, t) in source.iter().zip(target) {
        let ds = s - cs;
        h += ds * (t - ct).transpose();
        spread += ds * ds.transpose();
    }
    let sv = spread.symmetric_eigenvalues();
    let (lo, hi) = (sv.min(), sv.max());
    // rank ≤ 1 source spread: rotation about the line is undetermined
    let mid = sv.sum() - lo - hi;
    if !(hi > 0.0) || mid <= 1e-20 * hi {
        return Err(Error::Degenerate("collinear or coincident correspondences".into()));
    }
    let svd = h.svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested Vᵀ");
    let v = v_t.transpose();
    let d = (v * u.transpose()).determinant().signum();
    let r = v * Matrix3::from_diagonal(&Vec3::new(1.0, 1.0, d)) * u.transpose();
    Ok(RigidTransform {
        rotation: r,
        translation: ct - r * cs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IcpParams {
    pub max_iters: usize,
    /// Stop when the relative decrease of the mean squared error drops below this.
    pub tol: f64,
}

impl Default for IcpParams {
    fn default() -> Self {
        IcpParams { max_iters: 100, tol: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcpOutcome {
    /// Maps mesh coordinates to cloud coordinates.
    pub transform: RigidTransform,
    pub iterations: usize,
    /// Mean squared point-to-surface distance, starting with the initial pose.
    pub mse_history: Vec<f64>,
}

/// Point-to-surface ICP of the rest boundary of `mesh` against `cloud`.
pub fn icp_align(mesh: &TetMesh, cloud: &PointCloud, params: &IcpParams) -> Result<IcpOutcome> {
    let projector = SurfaceProjector::new(mesh, &Displacement::zeros(mesh.vertex_count()), None)?;
    let floor = (1e-14 * mesh.diameter()).powi(2);
    let correspond = |t: &RigidTransform| {
        let inv = t.inverse();
        let mut mse = 0.0;
        let on_mesh: Vec<Vec3> = cloud
            .points()
            .iter()
            .map(|y| {
                let q = inv.apply(y);
                let c = projector.project(&q).position;
                mse += (c - q).norm_squared();
                c
            })
            .collect();
        (on_mesh, mse / cloud.len() as f64)
    };

    let mut transform = RigidTransform::identity();
    let (mut matched, mut mse) = correspond(&transform);
    let mut history = vec![mse];
    let mut iterations = 0;
    while iterations < params.max_iters && mse > floor {
        let next = fit_pairs(&matched, cloud.points())?;
        let (m, e) = correspond(&next);
        iterations += 1;
        history.push(e);
        let improvement = mse - e;
        transform = next;
        matched = m;
        let prev = mse;
        mse = e;
        if improvement < params.tol * prev {
            break;
        }
    }
    Ok(IcpOutcome {
        transform,
        iterations,
        mse_history: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compose_with_inverse_is_identity() {
        let t = RigidTransform::about_point(&Vec3::new(1.0, 2.0, 0.5), 0.7, &Vec3::new(0.1, 0.0, 0.3), &Vec3::new(1.0, -2.0, 0.5));
        let id = t.compose(&t.inverse());
        assert!((id.rotation - Matrix3::identity()).amax() < 1e-15);
        assert!(id.translation.norm() < 1e-15);
        assert!(t.rotation_angle_to(&t).abs() < 1e-15);
        assert!((RigidTransform::identity().rotation_angle_to(&t) - 0.7).abs() < 1e-14);
    }

    #[test]
    fn array_round_trip_and_validation() {
        let t = RigidTransform::about_point(&Vec3::z(), 0.3, &Vec3::zeros(), &Vec3::new(0.0, 1.0, 2.0));
        assert_eq!(RigidTransform::from_array(&t.to_array()).unwrap(), t);
        let mut bad = t.to_array();
        bad[0] = -bad[0];
        assert!(RigidTransform::from_array(&bad).is_err());
        let reflection = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0];
        assert!(RigidTransform::from_array(&reflection).is_err());
        assert!(RigidTransform::from_array(&[1.0; 3]).is_err());
    }

    #[test]
    fn collinear_pairs_are_degenerate() {
        let s: Vec<Vec3> = (0..5).map(|i| Vec3::new(i as f64, 2.0 * i as f64, 0.0)).collect();
        assert!(matches!(fit_pairs(&s, &s), Err(Error::Degenerate(_))));
        assert!(matches!(fit_pairs(&s[..2], &s[..2]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn planar_reflection_is_guarded() {
        // mirrored target: best proper rotation must keep det = +1
        let s = [Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0), Vec3::new(0.0, 0.0, 1.0)];
        let t: Vec<Vec3> = s.iter().map(|p| Vec3::new(p.x, p.y, -p.z)).collect();
        let r = fit_pairs(&s, &t).unwrap();
        assert!(r.rotation.determinant() > 0.0);
    }
}
