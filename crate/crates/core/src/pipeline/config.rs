//! TOML experiment configs. Relative paths resolve against the config file's
//! directory.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::control::OptimizerParams;
use crate::elasticity::{ElasticModel, MaterialModel, SolverOptions};
use crate::mesh::io::{read_labels, read_mesh};
use crate::mesh::{RegionLabels, RegionSelector, TetMesh};
use crate::rigid::IcpParams;
use crate::{Error, Result};

use super::gradcheck::AuditParams;
use super::register::RegistrationParams;

/// Parses a TOML config; returns it with the directory used for relative paths.
pub fn load_config<T: DeserializeOwned>(path: &Path) -> Result<(T, PathBuf)> {
    load_config_with(path, &[])
}

/// Like [`load_config`], first applying `key.path=value` overrides. Values
/// are parsed as TOML, falling back to a bare string.
pub fn load_config_with<T: DeserializeOwned>(path: &Path, overrides: &[String]) -> Result<(T, PathBuf)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut table: toml::Table = text
        .parse()
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let cfg = T::deserialize(toml::Value::Table(table))
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((cfg, base))
}

fn apply_override(table: &mut toml::Table, arg: &str) -> Result<()> {
    let (key, raw) = arg
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{arg}` is not key=value")))?;
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("bad override key `{key}`")));
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override `{key}`: `{p}` is not a table")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

pub fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub mesh: PathBuf,
    pub labels: PathBuf,
    pub material: MaterialModel,
    #[serde(default)]
    pub solver: SolverOptions,
}

impl ModelConfig {
    pub fn load(&self, base: &Path) -> Result<(TetMesh, RegionLabels)> {
        let mesh = read_mesh(&resolve(base, &self.mesh))?;
        let labels = read_labels(&resolve(base, &self.labels))?;
        Ok((mesh, labels))
    }

    pub fn build(&self, base: &Path) -> Result<ElasticModel> {
        let (mesh, labels) = self.load(base)?;
        ElasticModel::with_options(mesh, self.material, labels, self.solver)
    }
}

/// Triangle selectors for the three label sets; `fixed` takes the vertices of
/// the selected triangles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelSelectors {
    pub matching: RegionSelector,
    pub loaded: RegionSelector,
    pub fixed: RegionSelector,
}

impl LabelSelectors {
    pub fn apply(&self, mesh: &TetMesh) -> Result<RegionLabels> {
        let fixed = mesh.triangle_vertices(&self.fixed.select(mesh)?);
        let fixed_set: std::collections::BTreeSet<usize> = fixed.iter().copied().collect();
        // loaded triangles may not touch the clamp
        let loaded = self
            .loaded
            .select(mesh)?
            .into_iter()
            .filter(|&t| mesh.boundary_tris()[t].iter().all(|v| !fixed_set.contains(v)))
            .collect();
        let labels = RegionLabels::new(self.matching.select(mesh)?, loaded, fixed);
        labels.validate(mesh)?;
        Ok(labels)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenMeshConfig {
    pub cells: [usize; 3],
    pub lengths: [f64; 3],
    pub mesh_out: PathBuf,
    pub labels_out: Option<PathBuf>,
    pub labels: Option<LabelSelectors>,
}

/// How the tool triangle pair is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ToolSpec {
    Triangles { tool_triangles: [usize; 2] },
    /// Loaded triangle nearest the point and its nearest loaded neighbour.
    Point { tool_point: [f64; 3] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseConfig {
    pub model: ModelConfig,
    pub out_dir: PathBuf,
    #[serde(flatten)]
    pub tool: ToolSpec,
    pub direction: Option<[f64; 3]>,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_step_displacement")]
    pub step_displacement: f64,
    #[serde(default = "default_samples")]
    pub sample_count: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub noise_sd: f64,
    pub visible: Option<RegionSelector>,
}

fn default_steps() -> usize {
    50
}

fn default_step_displacement() -> f64 {
    1e-3
}

fn default_samples() -> usize {
    500
}

fn default_zone() -> usize {
    50
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    pub case_dir: PathBuf,
    /// Reconstruction model; may use a different mesh than the generator.
    pub model: ModelConfig,
    pub out_dir: PathBuf,
    /// Number of loaded vertices nearest the tool forming the control zone.
    #[serde(default = "default_zone")]
    pub control_zone_size: usize,
    #[serde(default)]
    pub optimizer: OptimizerParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegisterConfig {
    pub model: ModelConfig,
    pub clouds: Vec<PathBuf>,
    pub out_dir: PathBuf,
    /// Worker threads; 0 uses the rayon default.
    #[serde(default)]
    pub threads: usize,
    #[serde(default)]
    pub registration: RegistrationParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IcpConfig {
    pub mesh: PathBuf,
    pub cloud: PathBuf,
    pub transform_out: PathBuf,
    #[serde(default)]
    pub icp: IcpParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckGradConfig {
    pub model: ModelConfig,
    /// Observation; without one, a cloud is synthesized from a random load.
    pub cloud: Option<PathBuf>,
    /// Standard deviation of the random per-vertex forces (N).
    #[serde(default = "default_force_scale")]
    pub force_scale: f64,
    #[serde(default)]
    pub audit: AuditParams,
    pub report_out: Option<PathBuf>,
}

fn default_force_scale() -> f64 {
    1.0
}
