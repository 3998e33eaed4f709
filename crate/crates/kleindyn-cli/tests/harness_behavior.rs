//! End-to-end behavior of the harness: snapshot round-trips, comparison
//! metrics, config validation, run determinism, the free-particle
//! cross-check between the two pipelines, and the binary's error contract.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;

use kleindyn_cli::config::{EquationTag, LoadedScenario};
use kleindyn_cli::output::write_artifacts;
use kleindyn_cli::scenario::{run_scenario, RunArtifacts, RunMethod, RunOptions, ScenarioError};
use kleindyn_cli::snapshot::{
    compare, export_snapshot, import_snapshot, Provenance, Snapshot, SnapshotError,
};

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn gaussian_density_snapshot(n: usize, center: f64, t: f64) -> Snapshot {
    let xs: Vec<f64> = (0..n).map(|i| -20.0 + 40.0 * i as f64 / (n - 1) as f64).collect();
    let re_phi: Vec<f64> = xs
        .iter()
        .map(|&x| (-(x - center) * (x - center) / 8.0).exp())
        .collect();
    let zeros = vec![0.0; n];
    let rho: Vec<f64> = re_phi.iter().map(|a| a * a).collect();
    Snapshot {
        t,
        equation: EquationTag::KleinGordon,
        provenance: Provenance::SemiAnalytic,
        scenario_sha256: "deadbeef".to_owned(),
        x: xs,
        re_phi,
        im_phi: zeros.clone(),
        re_chi: zeros.clone(),
        im_chi: zeros,
        rho,
    }
}

#[test]
fn csv_round_trip_preserves_every_column_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("snap.csv");
    let mut snap = gaussian_density_snapshot(3, 0.3, 1.25);
    snap.im_phi[1] = -0.625e-3;
    snap.rho[1] = snap.re_phi[1] * snap.re_phi[1] + snap.im_phi[1] * snap.im_phi[1];
    export_snapshot(&snap, &path, Some(1.3), &[[-1.0, 1.0]]).unwrap();

    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 4, "header plus one row per point");
    assert!(text.starts_with("x,re_phi,im_phi,re_chi,im_chi,rho\n"));
    assert!(dir.path().join("snap.csv.meta.json").exists());

    let back = import_snapshot(&path).unwrap();
    assert_eq!(back.t, snap.t);
    assert_eq!(back.equation, snap.equation);
    for i in 0..snap.x.len() {
        assert_eq!(back.x[i].to_bits(), snap.x[i].to_bits());
        assert_eq!(back.re_phi[i].to_bits(), snap.re_phi[i].to_bits());
        assert_eq!(back.im_phi[i].to_bits(), snap.im_phi[i].to_bits());
        assert_eq!(back.re_chi[i].to_bits(), snap.re_chi[i].to_bits());
        assert_eq!(back.im_chi[i].to_bits(), snap.im_chi[i].to_bits());
        assert_eq!(back.rho[i].to_bits(), snap.rho[i].to_bits());
    }
}

#[test]
fn comparison_metrics_grow_with_displacement_and_vanish_on_identity() {
    let a = gaussian_density_snapshot(201, 0.0, 2.0);
    let same = compare(&a, &a).unwrap();
    assert_eq!(same.rel_l2, 0.0);
    assert_eq!(same.sup, 0.0);
    assert_eq!(same.points, 201);

    let mut last = 0.0;
    for shift in [0.5, 1.0, 2.0, 4.0] {
        let b = gaussian_density_snapshot(201, shift, 2.0);
        let m = compare(&a, &b).unwrap();
        assert!(
            m.rel_l2 > last,
            "rel_l2 should grow with displacement: {} after {last} at shift {shift}",
            m.rel_l2
        );
        last = m.rel_l2;
    }
}

#[test]
fn comparison_resamples_between_grids_and_rejects_time_mismatch() {
    let fine = gaussian_density_snapshot(401, 0.0, 2.0);
    let coarse = gaussian_density_snapshot(201, 0.0, 2.0);
    let m = compare(&fine, &coarse).unwrap();
    assert_eq!(m.points, 201);
    assert!(
        m.rel_l2 < 1e-3,
        "same smooth density on two grids should agree after resampling, got {}",
        m.rel_l2
    );

    let late = gaussian_density_snapshot(201, 0.0, 2.5);
    assert!(matches!(
        compare(&fine, &late),
        Err(SnapshotError::TimeMismatch { .. })
    ));
}

/// The free-particle scenario exercised by several tests below; computed once.
fn free_run() -> &'static (LoadedScenario, RunArtifacts) {
    static RUN: OnceLock<(LoadedScenario, RunArtifacts)> = OnceLock::new();
    RUN.get_or_init(|| {
        let loaded = LoadedScenario::from_path(&configs_dir().join("free_kg.json")).unwrap();
        let artifacts = run_scenario(&loaded, &RunOptions::default()).unwrap();
        (loaded, artifacts)
    })
}

#[test]
fn free_particle_pipelines_agree_without_a_barrier() {
    let (_, artifacts) = free_run();
    let metrics = &artifacts.report.per_snapshot;
    assert_eq!(metrics.len(), 1);
    assert!(
        metrics[0].rel_l2 <= 1e-4,
        "free-particle semi vs stepped density disagree: rel_l2 = {}",
        metrics[0].rel_l2
    );
}

#[test]
fn reported_region_charges_sum_to_the_total() {
    let (_, artifacts) = free_run();
    let all = artifacts
        .report
        .semi_charges
        .iter()
        .chain(&artifacts.report.fd_charges);
    for c in all {
        let sum = c.q1 + c.q2 + c.q3;
        assert!(
            (sum - c.qtotal).abs() <= 1e-12,
            "region charges must sum to the total: {} vs {} at t = {}",
            sum,
            c.qtotal,
            c.t
        );
    }
}

#[test]
fn identical_runs_write_byte_identical_artifacts() {
    let (loaded, first) = free_run();
    let second = run_scenario(loaded, &RunOptions::default()).unwrap();

    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let times = &loaded.config.snapshot_times;
    write_artifacts(first, times, &loaded.sha256, dir_a.path(), true).unwrap();
    write_artifacts(&second, times, &loaded.sha256, dir_b.path(), true).unwrap();

    let list = |d: &Path| -> Vec<String> {
        let mut names: Vec<String> = std::fs::read_dir(d)
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        names.sort();
        names
    };
    let names_a = list(dir_a.path());
    assert_eq!(names_a, list(dir_b.path()));
    assert!(names_a.iter().any(|n| n.starts_with("snap_semi_00")));
    assert!(names_a.iter().any(|n| n.starts_with("snap_fd_00")));
    assert!(names_a.contains(&"report.json".to_owned()));
    assert!(names_a.contains(&"plot.gp".to_owned()));
    for name in &names_a {
        let a = std::fs::read(dir_a.path().join(name)).unwrap();
        let b = std::fs::read(dir_b.path().join(name)).unwrap();
        assert_eq!(a, b, "artifact {name} differs between identical runs");
    }
}

fn parse_config(json: &str) -> Result<LoadedScenario, kleindyn_cli::config::ConfigError> {
    let loaded = LoadedScenario::from_bytes(json.as_bytes(), None)?;
    loaded.config.validate()?;
    Ok(loaded)
}

#[test]
fn configs_reject_malformed_scenarios() {
    let base = |extra: &str, family: &str, eps: &str| {
        format!(
            r#"{{
  "equation": "klein-gordon",
  "barrier_family": "{family}",
  "v": 3.4,
  "l_barrier": 20.0{eps},
  "x0": -40.0,
  "p0": 1.0,
  "d": 5.0,
  "domain_length": 200.0,
  "nx": 1024,
  "snapshot_times": [5.0]{extra}
}}"#
        )
    };

    assert!(parse_config(&base("", "rectangular", "")).is_ok());

    // Unknown keys are typos until proven otherwise.
    let err = parse_config(&base(r#", "vmax": 2.0"#, "rectangular", "")).unwrap_err();
    assert!(err.to_string().contains("vmax"), "{err}");

    // Snapshot times must be sorted.
    let bad_times = base("", "rectangular", "").replace("[5.0]", "[5.0, 2.0]");
    assert!(parse_config(&bad_times).is_err());

    // Edge-smoothness parameter is tied to the barrier family.
    assert!(parse_config(&base("", "smooth-tanh", "")).is_err());
    assert!(parse_config(&base("", "rectangular", r#", "epsilon": 5.0"#)).is_err());
    assert!(parse_config(&base("", "smooth-tanh", r#", "epsilon": 5.0"#)).is_ok());

    // The initial support must fit inside the domain...
    let far = base("", "rectangular", "").replace("\"x0\": -40.0", "\"x0\": -90.0");
    assert!(parse_config(&far).is_err());

    // ...and the momentum window must stay at positive momenta.
    let slow = base("", "rectangular", "").replace("\"p0\": 1.0", "\"p0\": 0.1");
    assert!(parse_config(&slow).is_err());

    // An unknown amplitude strategy is rejected up front, naming the options.
    let method = base(r#", "method_amplitudes": "cheat""#, "rectangular", "");
    let err = parse_config(&method).unwrap_err();
    assert!(err.to_string().contains("mse-partial"), "{err}");
}

#[test]
fn runs_refuse_wavefronts_that_reach_the_domain_edge() {
    let json = r#"{
  "equation": "klein-gordon",
  "barrier_family": "rectangular",
  "v": 3.4,
  "l_barrier": 20.0,
  "x0": -40.0,
  "p0": 1.0,
  "d": 5.0,
  "domain_length": 200.0,
  "nx": 1024,
  "snapshot_times": [120.0]
}"#;
    let loaded = LoadedScenario::from_bytes(json.as_bytes(), None).unwrap();
    let err = run_scenario(&loaded, &RunOptions::default()).unwrap_err();
    assert!(matches!(err, ScenarioError::Refused(_)), "{err}");
}

#[test]
fn spin_half_smooth_barriers_are_rejected_with_a_clear_reason() {
    let json = r#"{
  "equation": "dirac",
  "barrier_family": "smooth-tanh",
  "v": 3.4,
  "l_barrier": 20.0,
  "epsilon": 5.0,
  "x0": -40.0,
  "p0": 1.0,
  "d": 5.0,
  "domain_length": 200.0,
  "nx": 1024,
  "snapshot_times": [5.0]
}"#;
    let loaded = LoadedScenario::from_bytes(json.as_bytes(), None).unwrap();
    let opts = RunOptions {
        method: RunMethod::Semi,
        n_max_override: None,
    };
    let err = run_scenario(&loaded, &opts).unwrap_err();
    assert!(
        err.to_string().contains("spin-0"),
        "expected the smooth spin-1/2 rejection to explain itself: {err}"
    );
}

#[test]
fn binary_reports_errors_as_json_and_completes_runs() {
    let exe = env!("CARGO_BIN_EXE_kleindyn");

    let out = Command::new(exe)
        .args(["run", "--config", "/nonexistent/config.json"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    let line = stderr.lines().last().unwrap();
    let parsed: serde_json::Value = serde_json::from_str(line).unwrap();
    assert!(parsed.get("error").is_some(), "stderr line: {line}");

    let dir = tempfile::tempdir().unwrap();
    let config = configs_dir().join("kg_causality.json");
    let out = Command::new(exe)
        .args([
            "run",
            "--config",
            config.to_str().unwrap(),
            "--method",
            "fd",
            "--out",
            dir.path().to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.path().join("report.json").exists());
    let snap = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("snap_fd_00") && n.ends_with(".csv"))
        })
        .expect("stepped snapshot written");
    let imported = import_snapshot(&snap).unwrap();
    assert!((imported.t - 10.0).abs() < 0.02, "achieved time near request");
}
