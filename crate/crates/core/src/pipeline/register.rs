//! Rigid then elastic registration of a mesh to one point cloud.

use serde::{Deserialize, Serialize};

use crate::control::{minimize, ControlProblem, MinimizeReport, OptimizerParams, Regularizer};
use crate::elasticity::{Displacement, ElasticModel, ForceField};
use crate::mesh::TetMesh;
use crate::objective::PointCloud;
use crate::rigid::{icp_align, IcpParams, RigidTransform};
use crate::{Result, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegistrationParams {
    /// Skip ICP and register in the mesh frame.
    pub skip_rigid: bool,
    pub icp: IcpParams,
    pub optimizer: OptimizerParams,
    pub regularizer: Regularizer,
    pub cap: Option<f64>,
}

impl Default for RegistrationParams {
    fn default() -> Self {
        RegistrationParams {
            skip_rigid: false,
            icp: IcpParams::default(),
            optimizer: OptimizerParams::default(),
            regularizer: Regularizer::None,
            cap: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistrationReport {
    pub icp_iterations: usize,
    /// Absent when ICP was skipped.
    pub icp_initial_mse: Option<f64>,
    pub icp_final_mse: Option<f64>,
    pub elastic: MinimizeReport,
}

#[derive(Debug, Clone)]
pub struct RegistrationOutcome {
    /// Mesh frame to cloud frame.
    pub transform: RigidTransform,
    /// Elastic displacement in the mesh frame.
    pub displacement: Displacement,
    pub force: ForceField,
    pub report: RegistrationReport,
}

impl RegistrationOutcome {
    /// Deformed vertex positions expressed in the cloud frame.
    pub fn deformed_vertices(&self, mesh: &TetMesh) -> Vec<Vec3> {
        self.displacement
            .deformed_positions(mesh)
            .iter()
            .map(|x| self.transform.apply(x))
            .collect()
    }
}

/// ICP pre-alignment followed by elastic registration in the mesh frame
/// against the cloud mapped back by the inverse rigid transform.
pub fn register(model: ElasticModel, cloud: &PointCloud, params: &RegistrationParams) -> Result<RegistrationOutcome> {
    let (transform, icp_iterations, icp_initial_mse, icp_final_mse) = if params.skip_rigid {
        (RigidTransform::identity(), 0, None, None)
    } else {
        let icp = icp_align(model.mesh(), cloud, &params.icp)?;
        let first = icp.mse_history[0];
        let last = *icp.mse_history.last().expect("initial MSE recorded");
        (icp.transform, icp.iterations, Some(first), Some(last))
    };
    let inv = transform.inverse();
    let local = cloud.map(|p| inv.apply(p));
    let problem = ControlProblem::new(model, local)?
        .with_regularizer(params.regularizer)
        .with_cap(params.cap)?
        .with_params(params.optimizer)?;
    let out = minimize(&problem, &problem.zero_control())?;
    Ok(RegistrationOutcome {
        transform,
        displacement: out.displacement,
        force: out.force,
        report: RegistrationReport {
            icp_iterations,
            icp_initial_mse,
            icp_final_mse,
            elastic: out.report,
        },
    })
}
