use std::fs;
use std::path::Path;
use std::process::Command;

use vivlab::config::{preset, FluidConfig, ScenarioConfig};
use vivlab::control::ControllerKind;
use vivlab::dynamics::{CoupledPlant, CoupledState, FluidModel, Held, Method, ObserverGains};
use vivlab::metrics::suppression_from_peaks;
use vivlab::model::PlantParams;
use vivlab::replay::Interpolation;
use vivlab::runner::{run_comparison, run_scenario, run_ur_sweep, Manifest, SweepSpec, SweepVariable};
use vivlab::sim::{simulate, TimeSeries, CSV_HEADER};
use vivlab::uncertainty::UncertaintySpec;
use vivlab::wake::{WakeParams, WakeState};
use vivlab::Error;

fn short(name: &str, uncertainty: bool) -> ScenarioConfig {
    let mut cfg = preset(name, uncertainty).unwrap();
    cfg.timeline.t_end = 60.0;
    cfg.timeline.t_ctrl_on = 30.0;
    cfg
}

fn diverging(dir: &Path) -> ScenarioConfig {
    let mut cfg = short("paper-smc", false);
    cfg.gains.k_c = 1e5;
    cfg.outputs.dir = dir.to_path_buf();
    cfg
}

#[test]
fn sweep_peaks_inside_lock_in_band() {
    let values: Vec<f64> = (3..=9).map(f64::from).collect();
    let points =
        run_ur_sweep(&SweepSpec { variable: SweepVariable::Ur, values, base: preset("paper-free", false).unwrap() })
            .unwrap();
    assert_eq!(points.len(), 7);
    let peak = points.iter().max_by(|a, b| a.y_max_over_d.partial_cmp(&b.y_max_over_d).unwrap()).unwrap();
    assert!((4.0..=7.0).contains(&peak.ur), "peak at Ur = {}", peak.ur);
    let ur5 = points.iter().find(|p| p.ur == 5.0).unwrap().y_max_over_d.unwrap();
    assert!((0.3..=0.9).contains(&ur5));
}

#[test]
fn sweep_order_follows_input() {
    let values = vec![8.0, 3.0, 5.5];
    let points =
        run_ur_sweep(&SweepSpec { variable: SweepVariable::Ur, values: values.clone(), base: short("paper-free", false) })
            .unwrap();
    assert_eq!(points.iter().map(|p| p.ur).collect::<Vec<_>>(), values);
}

#[test]
fn comparison_is_internally_consistent() {
    let tmp = tempfile::tempdir().unwrap();
    let cfgs = ["paper-simple", "paper-composite", "paper-smc"].map(|p| short(p, true));
    let report = run_comparison(&cfgs, Some(tmp.path())).unwrap();
    assert_eq!(report.baseline.controller, "none");
    assert_eq!(report.rows.len(), 3);
    for row in &report.rows {
        let expected = suppression_from_peaks(report.baseline.y_max, row.y_max).unwrap().suppression_pct;
        assert_eq!(row.suppression_pct, Some(expected));
    }
    for f in ["comparison.json", "comparison.txt"] {
        assert!(tmp.path().join(f).exists());
    }
    for r in report.all_rows() {
        assert!(tmp.path().join(&r.name).join("timeseries.csv").exists());
    }
}

#[test]
fn comparison_names_the_inconsistent_section() {
    let a = short("paper-free", false);
    let mut b = short("paper-composite", false);
    b.timeline.t_end = 70.0;
    match run_comparison(&[a.clone(), b], None) {
        Err(Error::Inconsistent { field }) => assert_eq!(field, "timeline"),
        other => panic!("expected inconsistency, got {:?}", other.is_ok()),
    }
    let c = short("paper-composite", true);
    assert!(matches!(run_comparison(&[a, c], None), Err(Error::Inconsistent { field }) if field == "uncertainty"));
}

#[test]
fn run_writes_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = short("paper-simple", true);
    cfg.outputs.dir = tmp.path().to_path_buf();
    let art = run_scenario(&cfg, true).unwrap();

    let text = fs::read_to_string(tmp.path().join("timeseries.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
    let expected_rows = 1 + (cfg.timeline.t_end / (cfg.integrator.dt * cfg.integrator.log_every as f64)).floor() as usize;
    assert_eq!(lines.count(), expected_rows);
    assert_eq!(art.series.len(), expected_rows);

    let manifest: Manifest = serde_json::from_str(&fs::read_to_string(tmp.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.status, "ok");
    assert_eq!(manifest.seed, 42);
    assert_eq!(manifest.config, cfg);

    let snapshot = fs::read_to_string(tmp.path().join("network.csv")).unwrap();
    assert_eq!(snapshot.lines().count(), 1 + cfg.network.nodes);
    assert!(tmp.path().join("metrics.json").exists());

    let back = TimeSeries::read_csv(text.as_bytes()).unwrap();
    assert!(back.samples.iter().all(|s| s.s_d.is_none() && s.delta_hat.is_some()));
}

#[test]
fn quiet_configuration_gives_zero_series() {
    let mut cfg = short("paper-free", false);
    cfg.fluid = FluidConfig::Off;
    cfg.initial.y = Some(0.0);
    let series = simulate(&cfg.build().unwrap()).unwrap();
    assert!(series.samples.iter().all(|s| s.x == 0.0 && s.y == 0.0 && s.u == 0.0 && s.f_l == 0.0));
}

#[test]
fn divergence_leaves_partial_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = diverging(tmp.path());
    match run_scenario(&cfg, true) {
        Err(Error::Divergence { t, .. }) => assert!(t > cfg.timeline.t_ctrl_on),
        other => panic!("expected divergence, got ok = {}", other.is_ok()),
    }
    let manifest: Manifest = serde_json::from_str(&fs::read_to_string(tmp.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.status, "failed");
    assert!(manifest.error.unwrap().contains("diverged"));
    let partial = TimeSeries::read_csv(fs::File::open(tmp.path().join("timeseries.csv")).unwrap()).unwrap();
    assert!(!partial.is_empty());
    assert!(!tmp.path().join("metrics.json").exists());
}

#[test]
fn validation_happens_before_any_write() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = short("paper-free", false);
    cfg.timeline.t_ctrl_on = 100.0;
    cfg.outputs.dir = tmp.path().join("never");
    assert!(matches!(run_scenario(&cfg, true), Err(Error::Validation { .. })));
    assert!(!cfg.outputs.dir.exists());
}

#[test]
fn unknown_gain_name_is_rejected() {
    let text = r#"{"controller": "composite", "gains": {"lambda": 12, "k_c": 1.5, "gama": 1.5,
        "k_d": 6, "lambda_d": 0.01, "k_se": 0.01}}"#;
    assert!(ScenarioConfig::from_json(text).is_err());
}

#[test]
fn replayed_forces_reproduce_the_wake_run() {
    let tmp = tempfile::tempdir().unwrap();
    let mut wake = short("paper-free", false);
    wake.integrator.log_every = 1;
    let original = simulate(&wake.build().unwrap()).unwrap();

    let path = tmp.path().join("forces.csv");
    let mut w = csv::Writer::from_path(&path).unwrap();
    w.write_record(["t", "f_L", "f_D"]).unwrap();
    for s in &original.samples {
        w.write_record([s.t.to_string(), s.f_l.to_string(), s.f_d.to_string()]).unwrap();
    }
    w.flush().unwrap();

    let mut replay = wake.clone();
    replay.fluid = FluidConfig::Replay { path, interpolation: Interpolation::Linear };
    let replayed = simulate(&replay.build().unwrap()).unwrap();

    let peak = original.samples.iter().map(|s| s.y.abs()).fold(0.0, f64::max);
    let worst = original.samples.iter().zip(&replayed.samples).map(|(a, b)| (a.y - b.y).abs()).fold(0.0, f64::max);
    assert!(worst < 0.01 * peak, "replay mismatch {worst:.3e} vs peak {peak:.3e}");
}

#[test]
fn observer_stays_on_the_plant_when_estimate_is_exact() {
    let params = PlantParams::reference();
    let fluid = FluidModel::Wake(WakeParams::default());
    let unc = UncertaintySpec { k1: 0.0, d3_amp: 0.0, t_on: 0.0, ..UncertaintySpec::default() };
    let plant = CoupledPlant {
        params: &params,
        fluid: &fluid,
        uncertainty: &unc,
        observer: Some(ObserverGains { lambda_d: 0.01, k_se: 0.01 }),
    };
    let mut state = CoupledState::default();
    state.body.y = 0.05;
    state.body.y_dot = -0.02;
    state.wake = WakeState { q: 1.0, q_dot: 0.0 };
    state.observer.y_hat = state.body.y;
    state.observer.y_hat_dot = state.body.y_dot;

    let dt = 1e-3;
    let mut worst = 0.0f64;
    for i in 0..20_000 {
        let t = i as f64 * dt;
        let u = 0.3 * (0.7 * t).sin();
        let delta_hat = unc.delta(t, &state.body, u, &params).total();
        state = plant.step(&state, Method::Rk4, Held { u, delta_hat }, t, dt).unwrap();
        worst = worst.max((state.observer.y_hat - state.body.y).abs());
    }
    assert!(worst <= 1e-6, "e_D reached {worst:.3e}");
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_vivlab"))
}

#[test]
fn cli_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");

    let status = cli().args(["run", "paper-smc", "--uncertainty", "on", "--seed", "7", "--out"]).arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(0));
    let manifest: Manifest = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.seed, 7);
    assert_eq!(manifest.config.controller, ControllerKind::Smc);
    assert!(manifest.config.uncertainty.is_some());

    let metrics = cli().arg("metrics").arg(out.join("timeseries.csv")).arg("--from").arg("105").output().unwrap();
    assert_eq!(metrics.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&metrics.stdout).unwrap();
    assert!(v["cost"]["mae"].as_f64().unwrap() > 0.0);

    assert_eq!(cli().args(["run", "paper-pid"]).status().unwrap().code(), Some(2));
    assert_eq!(cli().args(["controllability", "--k2", "1"]).status().unwrap().code(), Some(2));

    let bad = tmp.path().join("diverging.json");
    fs::write(&bad, diverging(&tmp.path().join("div")).to_json().unwrap()).unwrap();
    assert_eq!(cli().arg("run").arg(&bad).status().unwrap().code(), Some(3));

    let from_manifest = tmp.path().join("again");
    let status = cli().arg("run").arg(out.join("manifest.json")).arg("--out").arg(&from_manifest).status().unwrap();
    assert_eq!(status.code(), Some(0));
    assert_eq!(
        fs::read(out.join("timeseries.csv")).unwrap(),
        fs::read(from_manifest.join("timeseries.csv")).unwrap()
    );
}

#[test]
fn cli_controllability_json() {
    let out = cli().args(["controllability", "--k2", "0.2", "--state", "0.1,-0.3", "--json"]).output().unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["det_numeric"].as_f64().unwrap() + 0.25931).abs() < 1e-5);
    assert_eq!(v["rank"], 2);
}
