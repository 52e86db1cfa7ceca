use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_elastoreg")).current_dir(dir).args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    run(dir, args).status.code().unwrap()
}

/// The desk configs copied into a scratch directory, with small meshes.
fn workspace() -> tempfile::TempDir {
    let tmp = tempfile::tempdir().unwrap();
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/desk");
    for entry in std::fs::read_dir(configs).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "toml") {
            std::fs::copy(&p, tmp.path().join(p.file_name().unwrap())).unwrap();
        }
    }
    let d = tmp.path();
    ok(d, &["gen-mesh", "-c", "generator_mesh.toml", "--set", "cells=[6, 5, 3]"]);
    ok(d, &["gen-mesh", "-c", "recon_mesh.toml", "--set", "cells=[7, 6, 3]"]);
    tmp
}

#[test]
fn help_lists_every_subcommand() {
    let help = ok(Path::new("."), &["--help"]);
    for cmd in ["gen-mesh", "gen-case", "icp", "register", "estimate-seq", "check-grad"] {
        assert!(help.contains(cmd), "{cmd}");
    }
}

#[test]
fn full_pipeline_writes_its_outputs() {
    let tmp = workspace();
    let d = tmp.path();
    let s = ok(d, &["gen-case", "-c", "case.toml", "--steps", "4", "--seed", "3"]);
    assert!(s.contains("case: 4 steps"));
    for f in ["case.json", "generator.tet", "clouds/step_003.xyz", "truth/step_003.json"] {
        assert!(d.join("out/case").join(f).is_file(), "{f}");
    }

    let s = ok(d, &["estimate-seq", "-c", "estimate.toml", "--set", "control_zone_size=20"]);
    assert!(s.contains("estimate-seq: 4 steps"));
    for f in ["records.json", "plot.tsv", "final_force.json", "final_deformed.vtk", "timing.json"] {
        assert!(d.join("out/estimate").join(f).is_file(), "{f}");
    }
    let plot = std::fs::read_to_string(d.join("out/estimate/plot.tsv")).unwrap();
    assert_eq!(plot.lines().count(), 5);

    let set = "clouds=[\"out/case/clouds/step_001.xyz\", \"out/case/clouds/step_003.xyz\"]";
    ok(d, &["register", "-c", "register.toml", "--set", set, "--set", "registration.optimizer.max_iters=20"]);
    for stem in ["step_001", "step_003"] {
        for f in ["transform.toml", "force.json", "report.json", "deformed.vtk", "deformed_vertices.xyz"] {
            assert!(d.join("out/register").join(stem).join(f).is_file(), "{stem}/{f}");
        }
    }

    let s = ok(d, &["icp", "-c", "icp.toml", "--transform-out", "out/t.toml"]);
    assert!(s.starts_with("icp:"));
    assert!(std::fs::read_to_string(d.join("out/t.toml")).unwrap().contains("values"));

    let s = ok(d, &["check-grad", "-c", "check_grad.toml", "--directions", "3"]);
    assert!(s.contains("gradient audit passed"));
    assert!(d.join("out/gradient_audit.json").is_file());
}

#[test]
fn configuration_errors_exit_with_2() {
    let tmp = workspace();
    let d = tmp.path();
    assert_eq!(code(d, &["gen-mesh", "-c", "missing.toml"]), 2);
    assert_eq!(code(d, &["gen-mesh", "-c", "generator_mesh.toml", "--set", "bogus=1"]), 2);
    assert_eq!(code(d, &["gen-mesh", "-c", "generator_mesh.toml", "--set", "no-equals"]), 2);
    assert_eq!(code(d, &["check-grad", "-c", "check_grad.toml", "--set", "model.material.poisson_ratio=0.5"]), 2);
    assert_eq!(code(d, &["estimate-seq", "-c", "estimate.toml", "--case-dir", "nowhere"]), 2);
    assert_eq!(code(d, &["bogus-command"]), 2);
}

#[test]
fn solver_failures_exit_with_3() {
    let tmp = workspace();
    let d = tmp.path();
    let args = [
        "check-grad",
        "-c",
        "check_grad.toml",
        "--set",
        "model.material.kind=\"st_venant_kirchhoff\"",
        "--set",
        "force_scale=1e6",
        "--set",
        "model.solver.max_newton=3",
    ];
    assert_eq!(code(d, &args), 3);
}

#[test]
fn failed_gradient_audit_exits_with_4() {
    let tmp = workspace();
    let d = tmp.path();
    assert_eq!(code(d, &["check-grad", "-c", "check_grad.toml", "--tolerance", "1e-30"]), 4);
}
