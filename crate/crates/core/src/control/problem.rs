use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::elasticity::{Displacement, ElasticModel, ForceField};
use crate::objective::{functional_gradient, functional_value, PointCloud, Projection, SurfaceProjector};
use crate::{Error, Result};

use super::adjoint::adjoint_solve;

/// Optional penalty `R(b)` added to the data term.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regularizer {
    #[default]
    None,
    /// `R(b) = weight/2 ‖b‖²`.
    Tikhonov { weight: f64 },
}

impl Regularizer {
    pub fn value(&self, b: &ForceField) -> f64 {
        match self {
            Regularizer::None => 0.0,
            Regularizer::Tikhonov { weight } => 0.5 * weight * b.norm().powi(2),
        }
    }

    /// Gradient in control-vector layout.
    fn gradient(&self, control: &[f64]) -> Option<Vec<f64>> {
        match self {
            Regularizer::None => None,
            Regularizer::Tikhonov { weight } => Some(control.iter().map(|x| weight * x).collect()),
        }
    }
}

/// What the relative gradient tolerance is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientReference {
    /// `‖∇Φ(b0)‖` at the starting point of the solve.
    #[default]
    Initial,
    /// `‖∇Φ(0)‖` for the current observation (costs one extra evaluation
    /// when `b0 ≠ 0`).
    ZeroControl,
}

/// L-BFGS and line-search settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerParams {
    /// Number of stored curvature pairs.
    pub memory: usize,
    pub max_iters: usize,
    /// Stop when `‖∇Φ‖ ≤ grad_rtol ‖∇Φ_ref‖`.
    pub grad_rtol: f64,
    pub grad_reference: GradientReference,
    pub armijo_c1: f64,
    pub max_line_search: usize,
}

impl Default for OptimizerParams {
    fn default() -> Self {
        OptimizerParams {
            memory: 10,
            max_iters: 200,
            grad_rtol: 5e-4,
            grad_reference: GradientReference::Initial,
            armijo_c1: 1e-4,
            max_line_search: 40,
        }
    }
}

/// Everything `Φ(b) = J(u_b) + R(b)` depends on.
#[derive(Debug)]
pub struct ControlProblem {
    model: ElasticModel,
    cloud: PointCloud,
    support: Vec<usize>,
    projection_tris: Option<Vec<usize>>,
    regularizer: Regularizer,
    cap: Option<f64>,
    params: OptimizerParams,
}

/// One objective evaluation (direct solve, projections, adjoint solve).
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub phi: f64,
    pub j: f64,
    /// `∇Φ(b)` restricted to the control support.
    pub gradient: ForceField,
    pub displacement: Displacement,
    pub projections: Vec<Projection>,
}

impl ControlProblem {
    /// Control support defaults to the loaded-region vertices, and projections
    /// are restricted to the matching triangles.
    pub fn new(model: ElasticModel, cloud: PointCloud) -> Result<Self> {
        let labels = model.labels();
        let support = labels.loaded_vertices(model.mesh());
        if support.is_empty() {
            return Err(Error::Config("loaded region is empty: no control DOFs".into()));
        }
        let projection_tris = Some(labels.matching.clone());
        if labels.matching.is_empty() {
            return Err(Error::Config("matching region is empty".into()));
        }
        Ok(ControlProblem {
            model,
            cloud,
            support,
            projection_tris,
            regularizer: Regularizer::None,
            cap: None,
            params: OptimizerParams::default(),
        })
    }

    /// Restricts the control to `support`, which must consist of loaded-region,
    /// non-fixed vertices.
    pub fn with_support(mut self, mut support: Vec<usize>) -> Result<Self> {
        support.sort_unstable();
        support.dedup();
        if support.is_empty() {
            return Err(Error::Config("control support is empty".into()));
        }
        let loaded: BTreeSet<usize> = self.model.labels().loaded_vertices(self.model.mesh()).into_iter().collect();
        if let Some(v) = support.iter().find(|v| !loaded.contains(v)) {
            return Err(Error::Config(format!("control vertex {v} is not on the loaded region")));
        }
        self.support = support;
        Ok(self)
    }

    /// `false` projects onto the whole boundary instead of the matching set.
    pub fn with_matching_restriction(mut self, restrict: bool) -> Self {
        self.projection_tris = restrict.then(|| self.model.labels().matching.clone());
        self
    }

    pub fn with_regularizer(mut self, regularizer: Regularizer) -> Self {
        self.regularizer = regularizer;
        self
    }

    pub fn with_cap(mut self, cap: Option<f64>) -> Result<Self> {
        if let Some(c) = cap {
            if !(c > 0.0) {
                return Err(Error::Config(format!("force cap must be positive, got {c}")));
            }
        }
        self.cap = cap;
        Ok(self)
    }

    pub fn with_params(mut self, params: OptimizerParams) -> Result<Self> {
        if !(params.grad_rtol > 0.0) {
            return Err(Error::Config("grad_rtol must be positive".into()));
        }
        self.params = params;
        Ok(self)
    }

    /// Replaces the observation, keeping the model (and its factorization).
    pub fn set_cloud(&mut self, cloud: PointCloud) {
        self.cloud = cloud;
    }

    pub fn model(&self) -> &ElasticModel {
        &self.model
    }

    pub fn cloud(&self) -> &PointCloud {
        &self.cloud
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn cap(&self) -> Option<f64> {
        self.cap
    }

    pub fn params(&self) -> &OptimizerParams {
        &self.params
    }

    pub fn regularizer(&self) -> &Regularizer {
        &self.regularizer
    }

    pub fn projection_triangles(&self) -> Option<&[usize]> {
        self.projection_tris.as_deref()
    }

    pub fn zero_control(&self) -> ForceField {
        ForceField::from_control(
            self.model.mesh().vertex_count(),
            &self.support,
            &vec![0.0; 3 * self.support.len()],
        )
    }

    /// Re-expresses `b` on this problem's support; values must vanish elsewhere.
    pub fn adapt(&self, b: &ForceField) -> Result<ForceField> {
        if b.support() == self.support.as_slice() {
            return Ok(b.clone());
        }
        b.with_support(self.support.clone()).map(|f| {
            ForceField::from_control(f.values().len(), &self.support, &f.to_control())
        })
    }

    /// Runs the adjoint gradient computation for control `b`:
    /// direct solve, projections and `∇J`, adjoint solve, then
    /// `∇Φ = p_b + ∇R(b)` masked to the control support.
    pub fn evaluate(&self, b: &ForceField) -> Result<Evaluation> {
        let b = self.adapt(b)?;
        let mesh = self.model.mesh();
        let u = self.model.solve_direct(&b)?.displacement;
        let projector = SurfaceProjector::new(mesh, &u, self.projection_tris.as_deref())?;
        let projections = projector.project_all(&self.cloud);
        let j = functional_value(&self.cloud, &projections);
        let grad_j = functional_gradient(mesh, &u, &self.cloud, &projections)?;
        let p = adjoint_solve(&self.model, &u, &grad_j)?;

        let control = b.to_control();
        let mut grad: Vec<f64> = self
            .support
            .iter()
            .flat_map(|&v| {
                let pv = p.values()[v];
                [pv.x, pv.y, pv.z]
            })
            .collect();
        if let Some(gr) = self.regularizer.gradient(&control) {
            grad.iter_mut().zip(gr).for_each(|(g, r)| *g += r);
        }
        let phi = j + self.regularizer.value(&b);
        Ok(Evaluation {
            phi,
            j,
            gradient: ForceField::from_control(mesh.vertex_count(), &self.support, &grad),
            displacement: u,
            projections,
        })
    }
}

/// `(Φ(b), ∇Φ(b))` with the gradient masked to the control support.
pub fn objective_and_gradient(problem: &ControlProblem, b: &ForceField) -> Result<(f64, ForceField)> {
    let e = problem.evaluate(b)?;
    Ok((e.phi, e.gradient))
}
