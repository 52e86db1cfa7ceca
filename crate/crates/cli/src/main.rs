use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

use elastoreg::pipeline::commands::{run_check_grad, run_estimate, run_gen_case, run_gen_mesh, run_icp, run_register};
use elastoreg::pipeline::config::{load_config_with, CaseConfig, CheckGradConfig, EstimateConfig, GenMeshConfig, IcpConfig, RegisterConfig};
use elastoreg::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_AUDIT: u8 = 4;

/// Elastic registration and force estimation by optimal control of boundary loads.
#[derive(Parser)]
#[command(name = "elastoreg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML config file.
    #[arg(short, long)]
    config: PathBuf,
    /// Override a config key, e.g. `--set optimizer.max_iters=50`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Mesh a box and optionally label its regions.
    GenMesh {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        mesh_out: Option<String>,
    },
    /// Generate a synthetic tool-contact sequence.
    GenCase {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        out_dir: Option<String>,
    },
    /// Rigidly align a mesh to a point cloud.
    Icp {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        cloud: Option<String>,
        #[arg(long)]
        transform_out: Option<String>,
    },
    /// Register a mesh to one or more point clouds.
    Register {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        out_dir: Option<String>,
    },
    /// Estimate tool forces along a synthetic sequence.
    EstimateSeq {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        case_dir: Option<String>,
        #[arg(long)]
        out_dir: Option<String>,
    },
    /// Check the adjoint gradient against finite differences.
    CheckGrad {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        directions: Option<usize>,
        #[arg(long)]
        tolerance: Option<f64>,
    },
}

fn toml_str(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

/// Appends `key=value` overrides for flags that were given.
fn flag<T: ToString>(overrides: &mut Vec<String>, key: &str, v: Option<T>) {
    if let Some(v) = v {
        overrides.push(format!("{key}={}", v.to_string()));
    }
}

fn path_flag(overrides: &mut Vec<String>, key: &str, v: Option<String>) {
    flag(overrides, key, v.as_deref().map(toml_str));
}

fn load<T: DeserializeOwned>(common: &Common, mut extra: Vec<String>) -> Result<(T, PathBuf), Error> {
    let mut overrides = common.overrides.clone();
    overrides.append(&mut extra);
    load_config_with(&common.config, &overrides)
}

enum Failure {
    Run(Error),
    Audit(f64),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::GenMesh { common, mesh_out } => {
            let mut o = Vec::new();
            path_flag(&mut o, "mesh_out", mesh_out);
            let (cfg, base): (GenMeshConfig, _) = load(&common, o)?;
            let mesh = run_gen_mesh(&cfg, &base)?;
            println!(
                "mesh: {} vertices, {} tets, {} boundary triangles",
                mesh.vertex_count(),
                mesh.tets().len(),
                mesh.boundary_tris().len()
            );
        }
        Command::GenCase { common, seed, steps, out_dir } => {
            let mut o = Vec::new();
            flag(&mut o, "seed", seed);
            flag(&mut o, "steps", steps);
            path_flag(&mut o, "out_dir", out_dir);
            let (cfg, base): (CaseConfig, _) = load(&common, o)?;
            let case = run_gen_case(&cfg, &base)?;
            let last = case.steps.last().map(|s| s.f_true.norm()).unwrap_or(0.0);
            println!(
                "case: {} steps, tool triangles {:?}, final |f_true| = {last:e} N",
                case.steps.len(),
                case.tool_triangles
            );
        }
        Command::Icp { common, cloud, transform_out } => {
            let mut o = Vec::new();
            path_flag(&mut o, "cloud", cloud);
            path_flag(&mut o, "transform_out", transform_out);
            let (cfg, base): (IcpConfig, _) = load(&common, o)?;
            let out = run_icp(&cfg, &base)?;
            let mse = out.mse_history.last().copied().unwrap_or(f64::NAN);
            println!("icp: {} iterations, final MSE {mse:e}", out.iterations);
        }
        Command::Register { common, threads, out_dir } => {
            let mut o = Vec::new();
            flag(&mut o, "threads", threads);
            path_flag(&mut o, "out_dir", out_dir);
            let (cfg, base): (RegisterConfig, _) = load(&common, o)?;
            for (name, out) in run_register(&cfg, &base)? {
                let r = &out.report.elastic;
                let warn = if r.line_search_failed { " (line search failed)" } else { "" };
                println!(
                    "{name}: {} iterations, {} evaluations, J {:e} -> {:e}{warn}",
                    r.iterations,
                    r.evaluations,
                    r.j_history.first().copied().unwrap_or(f64::NAN),
                    r.final_j
                );
            }
        }
        Command::EstimateSeq { common, case_dir, out_dir } => {
            let mut o = Vec::new();
            path_flag(&mut o, "case_dir", case_dir);
            path_flag(&mut o, "out_dir", out_dir);
            let (cfg, base): (EstimateConfig, _) = load(&common, o)?;
            let est = run_estimate(&cfg, &base)?;
            let n = est.records.len() as f64;
            let evals = est.records.iter().map(|r| r.evaluations).sum::<usize>() as f64 / n;
            let errs: Vec<f64> = est.records.iter().filter_map(|r| r.relative_error).collect();
            let failed = est.records.iter().filter(|r| r.line_search_failed).count();
            print!("estimate-seq: {} steps, mean evaluations {evals:.2}", est.records.len());
            if !errs.is_empty() {
                print!(", mean relative error {:.4}", errs.iter().sum::<f64>() / errs.len() as f64);
            }
            println!();
            if failed > 0 {
                eprintln!("warning: line search failed in {failed} step(s)");
            }
        }
        Command::CheckGrad { common, seed, directions, tolerance } => {
            let mut o = Vec::new();
            flag(&mut o, "audit.seed", seed);
            flag(&mut o, "audit.directions", directions);
            flag(&mut o, "audit.tolerance", tolerance);
            let (cfg, base): (CheckGradConfig, _) = load(&common, o)?;
            let audit = run_check_grad(&cfg, &base)?;
            for (k, c) in audit.checks.iter().enumerate() {
                println!(
                    "direction {k}: analytic {:e}, finite difference {:e}, relative error {:.3e}",
                    c.analytic, c.finite_difference, c.relative_error
                );
            }
            if !audit.passed {
                return Err(Failure::Audit(audit.max_relative_error));
            }
            println!("gradient audit passed (max relative error {:.3e})", audit.max_relative_error);
        }
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    if e.is_solver_failure() {
        EXIT_SOLVER
    } else {
        EXIT_CONFIG
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::Audit(err)) => {
            eprintln!("error: gradient audit failed (max relative error {err:.3e})");
            ExitCode::from(EXIT_AUDIT)
        }
    }
}

