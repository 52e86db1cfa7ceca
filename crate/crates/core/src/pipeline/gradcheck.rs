//! Finite-difference audit of the adjoint gradient.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::control::ControlProblem;
use crate::elasticity::ForceField;
use crate::sparse::{dot, norm};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AuditParams {
    pub directions: usize,
    pub seed: u64,
    /// Step along a unit direction, relative to the force scale `Φ/‖∇Φ‖`.
    pub relative_step: f64,
    pub tolerance: f64,
}

impl Default for AuditParams {
    fn default() -> Self {
        AuditParams {
            directions: 10,
            seed: 0,
            relative_step: 1e-4,
            tolerance: 1e-5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionCheck {
    pub analytic: f64,
    pub finite_difference: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientAudit {
    pub objective: f64,
    pub gradient_norm: f64,
    pub step: f64,
    pub checks: Vec<DirectionCheck>,
    pub max_relative_error: f64,
    pub passed: bool,
}

/// Compares `∇Φ(b)·d` with `(Φ(b + h d) − Φ(b − h d)) / 2h` for random unit
/// directions `d` on the control support.
///
/// The relative error is taken against `max(|analytic|, |fd|)`, floored at
/// `1e-8 ‖∇Φ‖` so near-orthogonal directions do not dominate.
pub fn gradient_audit(problem: &ControlProblem, b: &ForceField, params: &AuditParams) -> Result<GradientAudit> {
    if params.directions == 0 {
        return Err(Error::InvalidArgument("gradient audit needs at least one direction".into()));
    }
    let b = problem.adapt(b)?;
    let n = b.values().len();
    let support = problem.support();
    let x = b.to_control();
    let e = problem.evaluate(&b)?;
    let g = e.gradient.to_control();
    let gnorm = norm(&g);
    if !(gnorm > 0.0) || !(e.phi > 0.0) {
        return Err(Error::InvalidArgument(
            "gradient audit needs a point with nonzero objective and gradient".into(),
        ));
    }
    let h = params.relative_step * e.phi / gnorm;
    let phi_at = |t: f64, d: &[f64]| -> Result<f64> {
        let xt: Vec<f64> = x.iter().zip(d).map(|(x, d)| x + t * d).collect();
        Ok(problem.evaluate(&ForceField::from_control(n, support, &xt))?.phi)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut checks = Vec::with_capacity(params.directions);
    for _ in 0..params.directions {
        let mut d: Vec<f64> = (0..x.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
        let dn = norm(&d);
        d.iter_mut().for_each(|v| *v /= dn);
        let analytic = dot(&g, &d);
        let fd = (phi_at(h, &d)? - phi_at(-h, &d)?) / (2.0 * h);
        let scale = analytic.abs().max(fd.abs()).max(1e-8 * gnorm);
        checks.push(DirectionCheck {
            analytic,
            finite_difference: fd,
            relative_error: (analytic - fd).abs() / scale,
        });
    }
    let max_relative_error = checks.iter().map(|c| c.relative_error).fold(0.0, f64::max);
    Ok(GradientAudit {
        objective: e.phi,
        gradient_norm: gnorm,
        step: h,
        checks,
        max_relative_error,
        passed: max_relative_error <= params.tolerance,
    })
}
