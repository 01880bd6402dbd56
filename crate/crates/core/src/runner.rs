//! Scenario orchestration: single runs with their output files, controller
//! comparisons against a free-vibration baseline, and reduced-velocity sweeps.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{Scenario, ScenarioConfig};
use crate::control::ControllerKind;
use crate::error::{Error, Result};
use crate::metrics::{cost_report, dominant_frequency, max_abs, suppression_from_peaks, CostReport};
use crate::par::par_map;
use crate::sim::{simulate_partial, SimOutput, TimeSeries};

/// Free-vibration peak is taken over the last this many seconds.
pub const FREE_WINDOW: f64 = 50.0;
/// Controlled peak excludes this much time after activation.
pub const CONTROLLED_SETTLE: f64 = 20.0;
/// Cost metrics start this long after activation.
pub const COST_SETTLE: f64 = 5.0;
/// Estimation error and weight statistics use the last this many seconds.
pub const FINAL_WINDOW: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightBand {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// Largest deviation from `mean`.
    pub deviation: f64,
    /// `deviation / mean`.
    pub relative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub name: String,
    pub controller: String,
    pub y_max: f64,
    pub y_max_window: [f64; 2],
    pub cost: Option<CostReport>,
    pub cost_window: [f64; 2],
    /// RMS of Δ̂ − Δ over the final window.
    pub delta_error_rms: Option<f64>,
    /// Statistics of ‖Ŵ‖∞ over the final window.
    pub weight_band: Option<WeightBand>,
    pub f_x: Option<f64>,
    pub f_y: Option<f64>,
    /// Controlled samples with |k_C·s| < |Δ̂ − Δ|.
    pub stability_violations: usize,
    pub controlled_samples: usize,
}

fn clamp_window(from: f64, to: f64, t_end: f64) -> [f64; 2] {
    let to = to.min(t_end);
    [from.clamp(0.0, to), to]
}

pub fn peak_window(sc: &Scenario) -> [f64; 2] {
    if sc.controller == ControllerKind::None {
        clamp_window(sc.t_end - FREE_WINDOW, sc.t_end, sc.t_end)
    } else {
        clamp_window(sc.gains.t_ctrl_on + CONTROLLED_SETTLE, sc.t_end, sc.t_end)
    }
}

pub fn evaluate(sc: &Scenario, series: &TimeSeries) -> Result<RunMetrics> {
    let y_max_window = peak_window(sc);
    let ys: Vec<f64> = series.window(y_max_window[0], y_max_window[1]).iter().map(|s| s.y).collect();
    let y_max = max_abs(&ys)?;

    let cost_window = clamp_window(sc.gains.t_ctrl_on + COST_SETTLE, sc.t_end, sc.t_end);
    let cost_ys: Vec<f64> = series.window(cost_window[0], cost_window[1]).iter().map(|s| s.y).collect();
    let cost = cost_report(&cost_ys, 0.0).ok();

    let final_win = series.window(sc.t_end - FINAL_WINDOW, sc.t_end);
    let errs: Vec<f64> = final_win.iter().filter_map(|s| s.delta_hat.map(|d| d - s.delta_true)).collect();
    let delta_error_rms =
        (!errs.is_empty()).then(|| (errs.iter().map(|e| e * e).sum::<f64>() / errs.len() as f64).sqrt());

    let ws: Vec<f64> = final_win.iter().filter_map(|s| s.w_norm).collect();
    let weight_band = (!ws.is_empty()).then(|| {
        let mean = ws.iter().sum::<f64>() / ws.len() as f64;
        let min = ws.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = ws.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let deviation = (max - mean).max(mean - min);
        WeightBand { mean, min, max, deviation, relative: if mean > 0.0 { deviation / mean } else { f64::INFINITY } }
    });

    let spectral = series.window(sc.t_end / 2.0, sc.t_end);
    let dt_out = series.sample_interval().unwrap_or(sc.integrator.dt);
    let f_y = dominant_frequency(&spectral.iter().map(|s| s.y).collect::<Vec<_>>(), dt_out).ok();
    let f_x = dominant_frequency(&spectral.iter().map(|s| s.x).collect::<Vec<_>>(), dt_out).ok();

    let (mut violations, mut controlled) = (0, 0);
    if sc.controller != ControllerKind::None {
        for s in series.window(sc.gains.t_ctrl_on, sc.t_end) {
            controlled += 1;
            let residual = s.delta_hat.unwrap_or(0.0) - s.delta_true;
            if (sc.gains.k_c * s.s).abs() < residual.abs() {
                violations += 1;
            }
        }
    }

    Ok(RunMetrics {
        name: sc.name.clone(),
        controller: sc.controller.as_str().to_string(),
        y_max,
        y_max_window,
        cost,
        cost_window,
        delta_error_rms,
        weight_band,
        f_x,
        f_y,
        stability_violations: violations,
        controlled_samples: controlled,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub config: ScenarioConfig,
}

pub struct RunArtifacts {
    pub series: TimeSeries,
    pub metrics: RunMetrics,
    pub dir: Option<PathBuf>,
}

fn write_manifest(dir: &Path, cfg: &ScenarioConfig, error: Option<&Error>) -> Result<()> {
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.network.seed,
        status: if error.is_some() { "failed" } else { "ok" }.to_string(),
        error: error.map(|e| e.to_string()),
        config: cfg.clone(),
    };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(())
}

fn write_series(dir: &Path, out: &SimOutput) -> Result<()> {
    out.series.write_csv(BufWriter::new(fs::File::create(dir.join("timeseries.csv"))?))?;
    if let Some(net) = &out.network {
        net.write_snapshot(BufWriter::new(fs::File::create(dir.join("network.csv"))?))?;
    }
    Ok(())
}

/// Runs one scenario. With `write` set, files go to `cfg.outputs.dir`:
/// `timeseries.csv`, `network.csv` (learning controllers), `metrics.json`
/// and `manifest.json`. A divergence still writes the partial series and a
/// failed manifest before the error is returned.
pub fn run_scenario(cfg: &ScenarioConfig, write: bool) -> Result<RunArtifacts> {
    let sc = cfg.build()?;
    let out = simulate_partial(&sc);
    let dir = write.then(|| cfg.outputs.dir.clone());
    if let Some(dir) = &dir {
        fs::create_dir_all(dir)?;
        write_series(dir, &out)?;
        write_manifest(dir, cfg, out.failure.as_ref())?;
    }
    if let Some(e) = out.failure {
        return Err(e);
    }
    let metrics = evaluate(&sc, &out.series)?;
    if let Some(dir) = &dir {
        fs::write(dir.join("metrics.json"), serde_json::to_string_pretty(&metrics)? + "\n")?;
    }
    Ok(RunArtifacts { series: out.series, metrics, dir })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub name: String,
    pub controller: String,
    pub y_max: f64,
    pub suppression_pct: Option<f64>,
    pub cost: Option<CostReport>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub baseline: ComparisonRow,
    pub rows: Vec<ComparisonRow>,
    #[serde(skip)]
    pub metrics: Vec<RunMetrics>,
}

fn check_shared(cfgs: &[ScenarioConfig]) -> Result<()> {
    let first = &cfgs[0];
    for c in &cfgs[1..] {
        if c.plant != first.plant {
            return Err(Error::Inconsistent { field: "plant".into() });
        }
        if c.fluid != first.fluid {
            return Err(Error::Inconsistent { field: "fluid".into() });
        }
        if c.timeline != first.timeline {
            return Err(Error::Inconsistent { field: "timeline".into() });
        }
        if c.uncertainty != first.uncertainty {
            return Err(Error::Inconsistent { field: "uncertainty".into() });
        }
    }
    Ok(())
}

/// Runs every config (in parallel) and tabulates peak amplitude, suppression
/// and cost against the free-vibration run. A free run is synthesized from
/// the first config when none is supplied.
pub fn run_comparison(cfgs: &[ScenarioConfig], out_dir: Option<&Path>) -> Result<ComparisonReport> {
    if cfgs.is_empty() {
        return Err(Error::validation("configs", "need at least one scenario"));
    }
    check_shared(cfgs)?;
    for c in cfgs {
        c.validate()?;
    }

    let mut all: Vec<ScenarioConfig> = cfgs.to_vec();
    let baseline_idx = match all.iter().position(|c| c.controller == ControllerKind::None) {
        Some(i) => i,
        None => {
            let mut free = cfgs[0].clone();
            free.controller = ControllerKind::None;
            free.name = "free".into();
            all.insert(0, free);
            0
        }
    };
    let mut used = std::collections::HashSet::new();
    for (i, c) in all.iter_mut().enumerate() {
        if c.name.is_empty() {
            c.name = c.controller.as_str().to_string();
        }
        if !used.insert(c.name.clone()) {
            c.name = format!("{}-{i}", c.name);
            used.insert(c.name.clone());
        }
        if let Some(dir) = out_dir {
            c.outputs.dir = dir.join(&c.name);
        }
    }

    let results = par_map(&all, |c| run_scenario(c, out_dir.is_some()).map(|a| a.metrics));
    let metrics: Vec<RunMetrics> = results.into_iter().collect::<Result<_>>()?;

    let base = &metrics[baseline_idx];
    let baseline = ComparisonRow {
        name: base.name.clone(),
        controller: base.controller.clone(),
        y_max: base.y_max,
        suppression_pct: None,
        cost: base.cost,
    };
    let mut rows = Vec::new();
    for (i, m) in metrics.iter().enumerate() {
        if i == baseline_idx {
            continue;
        }
        rows.push(ComparisonRow {
            name: m.name.clone(),
            controller: m.controller.clone(),
            y_max: m.y_max,
            suppression_pct: Some(suppression_from_peaks(base.y_max, m.y_max)?.suppression_pct),
            cost: m.cost,
        });
    }
    let report = ComparisonReport { baseline, rows, metrics };
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("comparison.json"), serde_json::to_string_pretty(&report)? + "\n")?;
        fs::write(dir.join("comparison.txt"), report.to_text())?;
    }
    Ok(report)
}

impl ComparisonReport {
    pub fn all_rows(&self) -> impl Iterator<Item = &ComparisonRow> {
        std::iter::once(&self.baseline).chain(&self.rows)
    }

    pub fn row(&self, controller: &str) -> Option<&ComparisonRow> {
        self.all_rows().find(|r| r.controller == controller)
    }

    /// Aligned table: peak amplitude and suppression, then cost metrics.
    pub fn to_text(&self) -> String {
        let show_supp = !self.rows.is_empty();
        let mut s = String::new();
        s.push_str(&format!("{:<20} {:>12}", "run", "y_max (m)"));
        if show_supp {
            s.push_str(&format!(" {:>14}", "suppression %"));
        }
        s.push_str(&format!(" {:>12} {:>12} {:>12} {:>12}\n", "SSE", "MSE", "RMSE", "MAE"));
        for r in self.all_rows() {
            s.push_str(&format!("{:<20} {:>12.3e}", r.name, r.y_max));
            if show_supp {
                match r.suppression_pct {
                    Some(p) => s.push_str(&format!(" {:>14.2}", p)),
                    None => s.push_str(&format!(" {:>14}", "-")),
                }
            }
            match &r.cost {
                Some(c) => s.push_str(&format!(" {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e}\n", c.sse, c.mse, c.rmse, c.mae)),
                None => s.push_str(&format!(" {:>12} {:>12} {:>12} {:>12}\n", "-", "-", "-", "-")),
            }
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    Ur,
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    pub base: ScenarioConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub ur: f64,
    pub y_max_over_d: Option<f64>,
    pub f_y_over_f_n: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Parses `start:stop:step` (inclusive stop) or a comma-separated list.
pub fn parse_range(text: &str) -> Result<Vec<f64>> {
    let bad = || Error::validation("ur", format!("expected start:stop:step or a list, got `{text}`"));
    let nums = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let (a, b, step) = (nums(parts[0])?, nums(parts[1])?, nums(parts[2])?);
        if !(step > 0.0) || b < a {
            return Err(bad());
        }
        let n = ((b - a) / step + 1e-9).floor() as usize;
        Ok((0..=n).map(|i| a + i as f64 * step).collect())
    } else {
        text.split(',').filter(|s| !s.trim().is_empty()).map(nums).collect()
    }
}

/// Free-vibration peak amplitude over a range of reduced velocities,
/// obtained by rescaling the stiffness. A failing point is recorded and the
/// sweep continues.
pub fn run_ur_sweep(sweep: &SweepSpec) -> Result<Vec<SweepPoint>> {
    if sweep.values.is_empty() {
        return Err(Error::validation("values", "sweep needs at least one value"));
    }
    if let Some(v) = sweep.values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::validation("values", format!("reduced velocity must be positive, got {v}")));
    }
    let mut base = sweep.base.clone();
    base.controller = ControllerKind::None;
    base.uncertainty = None;
    let base_params = base.plant.build()?;
    base.validate()?;

    Ok(par_map(&sweep.values, |&ur| {
        let point = || -> Result<(f64, Option<f64>)> {
            let params = base_params.with_reduced_velocity(ur)?;
            let mut cfg = base.clone();
            cfg.plant.k = params.stiffness;
            let sc = cfg.build()?;
            let out = simulate_partial(&sc);
            if let Some(e) = out.failure {
                return Err(e);
            }
            let m = evaluate(&sc, &out.series)?;
            let f_n = crate::model::derive_quantities(&sc.params)?.f_n;
            Ok((m.y_max / sc.params.diameter, m.f_y.map(|f| f / f_n)))
        };
        match point() {
            Ok((a, r)) => SweepPoint { ur, y_max_over_d: Some(a), f_y_over_f_n: r, error: None },
            Err(e) => SweepPoint { ur, y_max_over_d: None, f_y_over_f_n: None, error: Some(e.to_string()) },
        }
    }))
}
