//! End-to-end checks of the command-line surface: exit codes, strict config
//! handling, artifact emission, and checkpoint resumption.

use std::path::Path;
use std::process::Command;

fn jumplab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_jumplab"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn coeffs_succeeds_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "coeffs.json",
        r#"{"kernel": {"family": "gaussian", "sigma": 0.1},
            "grid": {"x_min": 0.0, "x_max": 1.0, "cells": 64}}"#,
    );
    let out = dir.path().join("out");
    let status = jumplab()
        .args(["coeffs", "--config", &config, "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(out.join("transport.csv").exists());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["status"], "ok");
    assert!(report["metrics"]["normalization_defect_max"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "bad.json",
        r#"{"kernel": {"family": "gaussian", "sigma": 0.1, "sigma_x": 2.0},
            "grid": {"x_min": 0.0, "x_max": 1.0, "cells": 64}}"#,
    );
    let output = jumplab()
        .args(["coeffs", "--config", &config, "--out"])
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("sigma_x"), "stderr: {stderr}");
}

#[test]
fn negative_parameter_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "neg.json",
        r#"{"kernel": {"family": "gaussian", "sigma": -0.1},
            "grid": {"x_min": 0.0, "x_max": 1.0, "cells": 64}}"#,
    );
    let output = jumplab()
        .args(["coeffs", "--config", &config, "--out"])
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("kernel.sigma"));
}

#[test]
fn numerical_failure_exits_3_with_failure_report() {
    // tabulated kernel supported only far off the grid: every column is
    // degenerate under the conservative closure
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "broken.json",
        r#"{"kernel": {"family": "tabulated", "x0": 0.0, "dx": 1.0, "nx": 1,
                       "delta0": 5.0, "ddelta": 0.1, "ndelta": 11,
                       "values": [0.1,0.4,0.8,1.2,1.6,2.0,1.6,1.2,0.8,0.4,0.1]},
            "grid": {"x_min": 0.0, "x_max": 1.0, "cells": 16},
            "initial": {"kind": "uniform", "lo": 0.0, "hi": 1.0},
            "t_end": 1.0}"#,
    );
    let out = dir.path().join("out");
    let output = jumplab()
        .args(["me-run", "--config", &config, "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3));
    // partial artifacts retained with a failure marker
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["status"], "failed");
    assert_eq!(report["failed_stage"], "assemble");
}

#[test]
fn scenario_id_mismatch_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "s4.json", r#"{"scenario": "S4_clt", "seed": 1}"#);
    let output = jumplab()
        .args(["scenario", "S2_absorbing_smooth", "--config", &config, "--out"])
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn walk_checkpoint_resume_matches_uninterrupted_run() {
    let dir = tempfile::tempdir().unwrap();
    let base = r#""kernel": {"family": "gaussian", "sigma": 0.05},
        "bins": {"lo": -1.0, "hi": 2.0, "count": 32},
        "initial": {"kind": "point", "x": 0.5},
        "n_walkers": 3000, "seed": 91"#;

    // uninterrupted run to t = 2
    let full_cfg = write_config(
        dir.path(),
        "full.json",
        &format!(r#"{{{base}, "t_end": 2.0, "snapshots": [1.5, 2.0]}}"#),
    );
    let full_out = dir.path().join("full");
    assert_eq!(
        jumplab()
            .args(["walk", "--config", &full_cfg, "--out"])
            .arg(&full_out)
            .status()
            .unwrap()
            .code(),
        Some(0)
    );

    // first leg to t = 1 with a checkpoint, then resume to t = 2
    let leg1_cfg = write_config(
        dir.path(),
        "leg1.json",
        &format!(r#"{{{base}, "t_end": 1.0, "checkpoint": "state.bin"}}"#),
    );
    let split_out = dir.path().join("split");
    assert_eq!(
        jumplab()
            .args(["walk", "--config", &leg1_cfg, "--out"])
            .arg(&split_out)
            .status()
            .unwrap()
            .code(),
        Some(0)
    );
    let leg2_cfg = write_config(
        dir.path(),
        "leg2.json",
        &format!(
            r#"{{{base}, "t_end": 2.0, "snapshots": [1.5, 2.0], "resume_from": "state.bin"}}"#
        ),
    );
    assert_eq!(
        jumplab()
            .args(["walk", "--config", &leg2_cfg, "--out"])
            .arg(&split_out)
            .status()
            .unwrap()
            .code(),
        Some(0)
    );

    for snap in ["walk_000.csv", "walk_001.csv"] {
        let full = std::fs::read(full_out.join(snap)).unwrap();
        let split = std::fs::read(split_out.join(snap)).unwrap();
        assert_eq!(full, split, "snapshot {snap} differs after resume");
    }
}

#[test]
fn pde_run_and_compare_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    // two short diffusion runs with different resolutions of the same problem
    let pde_cfg = |cells: usize| {
        format!(
            r#"{{"grid": {{"x_min": 0.0, "x_max": 1.0, "cells": {cells}}},
                "transport": {{"source": "explicit", "d": 0.005}},
                "form": "fick",
                "bc_left": {{"kind": "dirichlet", "value": 0.0}},
                "bc_right": {{"kind": "dirichlet", "value": 0.0}},
                "initial": {{"kind": "uniform", "lo": 0.25, "hi": 0.75}},
                "mode": {{"kind": "evolve", "t_end": 2.0}}}}"#
        )
    };
    for (name, cells) in [("a", 64), ("b", 64)] {
        let cfg = write_config(dir.path(), &format!("{name}.json"), &pde_cfg(cells));
        let status = jumplab()
            .args(["pde-run", "--config", &cfg, "--out"])
            .arg(dir.path().join(name))
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
    }
    let cmp_cfg = write_config(
        dir.path(),
        "cmp.json",
        &format!(
            r#"{{"a": "{}", "b": "{}", "region": [0.0, 1.0]}}"#,
            dir.path().join("a/pde_final.csv").display(),
            dir.path().join("b/pde_final.csv").display()
        ),
    );
    let out = dir.path().join("cmp");
    assert_eq!(
        jumplab()
            .args(["compare", "--config", &cmp_cfg, "--out"])
            .arg(&out)
            .status()
            .unwrap()
            .code(),
        Some(0)
    );
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["metrics"]["rel_l2"].as_f64().unwrap(), 0.0);
}

#[test]
fn me_run_ledger_closes_and_generator_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "me.json",
        r#"{"kernel": {"family": "tophat", "halfwidth": 0.2},
            "grid": {"x_min": 0.0, "x_max": 1.0, "cells": 32},
            "closure": "open",
            "initial": {"kind": "uniform", "lo": 0.0, "hi": 1.0},
            "t_end": 2.0, "snapshots": [1.0],
            "dump_generator": true,
            "interior": [0.25, 0.75]}"#,
    );
    let out = dir.path().join("out");
    assert_eq!(
        jumplab()
            .args(["me-run", "--config", &config, "--out"])
            .arg(&out)
            .status()
            .unwrap()
            .code(),
        Some(0)
    );
    assert!(out.join("generator.csv").exists());
    assert!(out.join("me_000.csv").exists());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let mass = &report["mass"];
    let closure = mass["interior"].as_f64().unwrap() + mass["exterior"].as_f64().unwrap()
        + mass["escaped"].as_f64().unwrap();
    assert!((closure - mass["initial"].as_f64().unwrap()).abs() <= 1e-9);
    // open closure on a bounded grid leaks mass off the edges
    assert!(mass["escaped"].as_f64().unwrap() > 0.0);
}

#[test]
fn scenario_custom_pipeline_runs() {
    let dir = tempfile::tempdir().unwrap();
    // 255 cells put x = 0.5 on a cell center, so the walker point source and
    // the lattice delta coincide; t = 25 waiting times lets the jump process
    // reach its diffusive regime before the comparison.
    let config = write_config(
        dir.path(),
        "custom.json",
        r#"{"scenario": "custom",
            "kernel": {"family": "gaussian", "sigma": 0.05},
            "grid": {"x_min": -0.5, "x_max": 1.5, "cells": 255},
            "initial": {"kind": "point", "x": 0.5},
            "t_end": 25.0, "snapshots": [12.5],
            "seed": 3,
            "walkers": {"n_walkers": 20000, "bins": {"lo": -0.5, "hi": 1.5, "count": 32}},
            "pde": {"transport": {"source": "kernel"},
                    "form": "fpe",
                    "bc_left": {"kind": "neumann_flux", "flux": 0.0},
                    "bc_right": {"kind": "neumann_flux", "flux": 0.0}},
            "compare_region": [0.0, 1.0]}"#,
    );
    let out = dir.path().join("out");
    assert_eq!(
        jumplab()
            .args(["scenario", "custom", "--config", &config, "--out"])
            .arg(&out)
            .status()
            .unwrap()
            .code(),
        Some(0)
    );
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["status"], "ok");
    // lattice and walkers agree bin by bin; lattice and diffusion agree in L2
    // up to the finite-jump kurtosis correction (~3/(2 r t) at this horizon)
    assert!(report["metrics"]["walker_me_max_z"].as_f64().unwrap() <= 4.0);
    assert!(report["metrics"]["rel_l2"].as_f64().unwrap() <= 0.03);
}

#[test]
fn missing_seed_for_stochastic_custom_run_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "custom.json",
        r#"{"scenario": "custom",
            "kernel": {"family": "gaussian", "sigma": 0.05},
            "grid": {"x_min": -0.5, "x_max": 1.5, "cells": 256},
            "initial": {"kind": "point", "x": 0.5},
            "t_end": 1.0,
            "walkers": {"n_walkers": 1000, "bins": {"lo": 0.0, "hi": 1.0, "count": 8}}}"#,
    );
    let output = jumplab()
        .args(["scenario", "custom", "--config", &config, "--out"])
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("seed"));
}
