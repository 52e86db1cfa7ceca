//! Sequential force estimation with warm starts.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::control::{force_resultant, ControlProblem, Minimizer, OptimizerParams};
use crate::elasticity::{Displacement, ElasticModel, ForceField};
use crate::objective::PointCloud;
use crate::{Error, Result, Vec3};

use super::synthetic::SyntheticCase;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationRecord {
    pub step: usize,
    pub f_est: Vec3,
    pub f_true: Option<Vec3>,
    /// `‖f_est − f_true‖ / ‖f_true‖`; absent without truth or when `f_true = 0`.
    pub relative_error: Option<f64>,
    pub evaluations: usize,
    pub iterations: usize,
    pub converged: bool,
    pub line_search_failed: bool,
    pub final_j: f64,
    /// Seconds spent in this update.
    #[serde(skip)]
    pub update_time: f64,
}

#[derive(Debug, Clone)]
pub struct SequenceEstimate {
    pub records: Vec<EstimationRecord>,
    pub final_force: ForceField,
    pub final_displacement: Displacement,
}

pub fn relative_error(f_est: &Vec3, f_true: &Vec3) -> Option<f64> {
    let n = f_true.norm();
    (n > 0.0).then(|| (f_est - f_true).norm() / n)
}

/// Estimates the force of every step of `case` on `model` (which may use a
/// different mesh than the generator), controlling only `control_zone`.
pub fn estimate_sequence(
    case: &SyntheticCase,
    model: ElasticModel,
    control_zone: &[usize],
    params: &OptimizerParams,
) -> Result<SequenceEstimate> {
    estimate_clouds(&case.clouds(), Some(&case.f_true()), model, control_zone, params)
}

/// Same as [`estimate_sequence`] for bare observations.
///
/// Step `k` starts from the solution of step `k − 1`; the first starts from zero.
pub fn estimate_clouds(
    clouds: &[PointCloud],
    truth: Option<&[Vec3]>,
    model: ElasticModel,
    control_zone: &[usize],
    params: &OptimizerParams,
) -> Result<SequenceEstimate> {
    if clouds.is_empty() {
        return Err(Error::InvalidArgument("empty sequence".into()));
    }
    if let Some(t) = truth {
        if t.len() != clouds.len() {
            return Err(Error::InvalidArgument(format!(
                "{} truth records for {} clouds",
                t.len(),
                clouds.len()
            )));
        }
    }
    let mut problem = ControlProblem::new(model, clouds[0].clone())?
        .with_support(control_zone.to_vec())?
        .with_params(*params)?;
    let mut b = problem.zero_control();
    let mut u = Displacement::zeros(problem.model().mesh().vertex_count());
    let mut minimizer = Minimizer::new(params.memory);
    let mut records = Vec::with_capacity(clouds.len());
    for (step, cloud) in clouds.iter().enumerate() {
        let start = Instant::now();
        problem.set_cloud(cloud.clone());
        let out = minimizer.run(&problem, &b)?;
        let update_time = start.elapsed().as_secs_f64();
        b = out.force;
        u = out.displacement;
        let f_est = force_resultant(&b, problem.support());
        let f_true = truth.map(|t| t[step]);
        records.push(EstimationRecord {
            step,
            f_est,
            f_true,
            relative_error: f_true.and_then(|t| relative_error(&f_est, &t)),
            evaluations: out.report.evaluations,
            iterations: out.report.iterations,
            converged: out.report.converged,
            line_search_failed: out.report.line_search_failed,
            final_j: out.report.final_j,
            update_time,
        });
    }
    Ok(SequenceEstimate {
        records,
        final_force: b,
        final_displacement: u,
    })
}
