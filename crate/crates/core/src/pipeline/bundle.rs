//! On-disk layout of synthetic cases and run outputs.
//!
//! A case directory holds `case.json`, `generator.tet`, and per step
//! `clouds/step_NNN.xyz` plus `truth/step_NNN.json` (nodal displacement).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::elasticity::Displacement;
use crate::mesh::io::{read_mesh, write_tet, write_text};
use crate::objective::{read_cloud, write_xyz};
use crate::{Error, Result, Vec3};

use super::estimate::EstimationRecord;
use super::synthetic::{CaseStep, SyntheticCase};

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    write_text(path, &to_json(value)?)
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

pub fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct StepEntry {
    traction: Vec3,
    f_true: Vec3,
    cloud: String,
    displacement: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CaseManifest {
    generator_mesh: String,
    tool_triangles: [usize; 2],
    tool_center: Vec3,
    direction: Vec3,
    traction_step: f64,
    tool_area: f64,
    steps: Vec<StepEntry>,
}

pub fn write_case(case: &SyntheticCase, dir: &Path) -> Result<()> {
    create_dir(&dir.join("clouds"))?;
    create_dir(&dir.join("truth"))?;
    write_tet(&case.generator_mesh, &dir.join("generator.tet"))?;
    let mut steps = Vec::with_capacity(case.steps.len());
    for (k, s) in case.steps.iter().enumerate() {
        let cloud = format!("clouds/step_{k:03}.xyz");
        let displacement = format!("truth/step_{k:03}.json");
        write_xyz(&s.cloud, &dir.join(&cloud))?;
        write_json(&s.displacement, &dir.join(&displacement))?;
        steps.push(StepEntry {
            traction: s.traction,
            f_true: s.f_true,
            cloud,
            displacement,
        });
    }
    let manifest = CaseManifest {
        generator_mesh: "generator.tet".into(),
        tool_triangles: case.tool_triangles,
        tool_center: case.tool_center(),
        direction: case.direction,
        traction_step: case.traction_step,
        tool_area: case.tool_area,
        steps,
    };
    write_json(&manifest, &dir.join("case.json"))
}

pub fn read_case(dir: &Path) -> Result<SyntheticCase> {
    let m: CaseManifest = read_json(&dir.join("case.json"))?;
    let generator_mesh = read_mesh(&dir.join(&m.generator_mesh))?;
    let steps = m
        .steps
        .iter()
        .map(|s| {
            let displacement: Displacement = read_json(&dir.join(&s.displacement))?;
            if displacement.len() != generator_mesh.vertex_count() {
                return Err(Error::Config(format!("{}: wrong vertex count", s.displacement)));
            }
            Ok(CaseStep {
                traction: s.traction,
                f_true: s.f_true,
                cloud: read_cloud(&dir.join(&s.cloud))?,
                displacement,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SyntheticCase {
        generator_mesh,
        tool_triangles: m.tool_triangles,
        direction: m.direction,
        traction_step: m.traction_step,
        tool_area: m.tool_area,
        steps,
    })
}

/// Tab-separated `step |f_true| |f_est| relative_error` (empty cells when
/// truth is unknown).
pub fn format_plot_data(records: &[EstimationRecord]) -> String {
    let mut out = String::from("step\tf_true_norm\tf_est_norm\trelative_error\n");
    for r in records {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            r.step,
            opt(r.f_true.map(|f| f.norm())),
            r.f_est.norm(),
            opt(r.relative_error)
        ));
    }
    out
}
