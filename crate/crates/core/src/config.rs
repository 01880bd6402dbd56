//! Scenario configuration: the JSON document read by the CLI, its
//! validation, and the built-in presets.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::control::{ControllerGains, ControllerKind};
use crate::dynamics::{FluidModel, IntegratorSettings};
use crate::error::{Error, Result};
use crate::model::{default_rho, PlantParams, REFERENCE_MASS_RATIO};
use crate::rbf::NetworkSettings;
use crate::replay::{Interpolation, ReplayProvider};
use crate::uncertainty::UncertaintySpec;
use crate::wake::WakeParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantConfig {
    pub m: f64,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "U")]
    pub u: f64,
    pub nu: f64,
    /// Defaults to the density implied by `m_star`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default = "default_mass_ratio")]
    pub m_star: f64,
}

fn default_mass_ratio() -> f64 {
    REFERENCE_MASS_RATIO
}

impl Default for PlantConfig {
    fn default() -> Self {
        PlantConfig { m: 1.571, k: 2.48, d: 1.0, u: 1.0, nu: 0.00667, rho: None, m_star: REFERENCE_MASS_RATIO }
    }
}

impl PlantConfig {
    pub fn build(&self) -> Result<PlantParams> {
        let rho = match self.rho {
            Some(r) => r,
            None => default_rho(self.m, self.m_star, self.d)?,
        };
        PlantParams::new(self.m, self.k, self.d, self.u, self.nu, rho)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum FluidConfig {
    Wake(WakeParams),
    Replay {
        path: PathBuf,
        #[serde(default)]
        interpolation: Interpolation,
    },
    Off,
}

impl Default for FluidConfig {
    fn default() -> Self {
        FluidConfig::Wake(WakeParams::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Timeline {
    pub t_end: f64,
    pub t_ctrl_on: f64,
}

impl Default for Timeline {
    fn default() -> Self {
        Timeline { t_end: 200.0, t_ctrl_on: 100.0 }
    }
}

/// Initial cylinder and wake state. `y` defaults to 0.001·D.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConditions {
    #[serde(default)]
    pub x: f64,
    #[serde(default)]
    pub x_dot: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
    #[serde(default)]
    pub y_dot: f64,
    #[serde(default)]
    pub q: f64,
    #[serde(default)]
    pub q_dot: f64,
}

/// Reference y_d(t) = amplitude·sin(omega·t); zero by default.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Reference {
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default)]
    pub omega: f64,
}

impl Reference {
    /// (y_d, ẏ_d, ÿ_d) at time t.
    pub fn at(&self, t: f64) -> (f64, f64, f64) {
        let (s, c) = (self.omega * t).sin_cos();
        let a = self.amplitude;
        let w = self.omega;
        (a * s, a * w * c, -a * w * w * s)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Measurement {
    /// Standard deviation of zero-mean noise on the measured lift, N.
    #[serde(default)]
    pub lift_noise_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    pub dir: PathBuf,
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub plant: PlantConfig,
    #[serde(default)]
    pub fluid: FluidConfig,
    /// `null` disables the uncertainty.
    #[serde(default)]
    pub uncertainty: Option<UncertaintySpec>,
    pub controller: ControllerKind,
    #[serde(default)]
    pub gains: GainsConfig,
    #[serde(default)]
    pub network: NetworkSettings,
    #[serde(default)]
    pub integrator: IntegratorSettings,
    #[serde(default)]
    pub timeline: Timeline,
    #[serde(default)]
    pub initial: InitialConditions,
    #[serde(default)]
    pub reference: Reference,
    #[serde(default)]
    pub measurement: Measurement,
    /// Symmetric limit on |u|, N. Off when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub saturation: Option<f64>,
    #[serde(default)]
    pub outputs: Outputs,
}

/// Gains as written in config; activation time lives in `timeline`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsConfig {
    pub lambda: f64,
    pub k_c: f64,
    pub gamma: f64,
    pub k_d: f64,
    pub lambda_d: f64,
    pub k_se: f64,
}

impl Default for GainsConfig {
    fn default() -> Self {
        let g = ControllerGains::default();
        GainsConfig { lambda: g.lambda, k_c: g.k_c, gamma: g.gamma, k_d: g.k_d, lambda_d: g.lambda_d, k_se: g.k_se }
    }
}

/// Validated, ready-to-run form of a [`ScenarioConfig`].
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub params: PlantParams,
    pub fluid: FluidModel,
    pub uncertainty: UncertaintySpec,
    pub controller: ControllerKind,
    pub gains: ControllerGains,
    pub network: NetworkSettings,
    pub integrator: IntegratorSettings,
    pub t_end: f64,
    pub initial: InitialConditions,
    pub reference: Reference,
    pub measurement: Measurement,
    pub saturation: Option<f64>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Reads either a scenario config or a run manifest (which embeds one).
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        match value.get("config") {
            Some(cfg) if value.get("tool").is_some() => Ok(serde_json::from_value(cfg.clone())?),
            _ => Ok(serde_json::from_value(value)?),
        }
    }

    pub fn gains(&self) -> ControllerGains {
        let g = &self.gains;
        ControllerGains {
            lambda: g.lambda,
            k_c: g.k_c,
            gamma: g.gamma,
            k_d: g.k_d,
            lambda_d: g.lambda_d,
            k_se: g.k_se,
            t_ctrl_on: self.timeline.t_ctrl_on,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.build().map(|_| ())
    }

    pub fn build(&self) -> Result<Scenario> {
        let params = self.plant.build()?;
        let fluid = match &self.fluid {
            FluidConfig::Wake(wp) => {
                wp.validate()?;
                FluidModel::Wake(*wp)
            }
            FluidConfig::Replay { path, interpolation } => {
                if !path.exists() {
                    return Err(Error::validation("fluid.path", format!("{} does not exist", path.display())));
                }
                FluidModel::Replay(Arc::new(ReplayProvider::load(path, *interpolation, &params)?))
            }
            FluidConfig::Off => FluidModel::Off,
        };
        let uncertainty = self.uncertainty.unwrap_or_else(UncertaintySpec::off);
        uncertainty.validate()?;
        let gains = self.gains();
        gains.validate()?;
        self.network.validate()?;
        self.integrator.validate()?;
        let tl = self.timeline;
        if !(tl.t_end.is_finite() && tl.t_end >= 0.0) {
            return Err(Error::validation("t_end", format!("must be non-negative, got {}", tl.t_end)));
        }
        if tl.t_ctrl_on > tl.t_end {
            return Err(Error::validation("t_ctrl_on", "must not exceed t_end"));
        }
        if !(self.measurement.lift_noise_std >= 0.0 && self.measurement.lift_noise_std.is_finite()) {
            return Err(Error::validation("lift_noise_std", "must be non-negative"));
        }
        if let Some(limit) = self.saturation {
            if !(limit > 0.0) {
                return Err(Error::validation("saturation", "must be positive"));
            }
        }
        for (name, v) in [("reference.amplitude", self.reference.amplitude), ("reference.omega", self.reference.omega)] {
            if !v.is_finite() {
                return Err(Error::validation(name, "must be finite"));
            }
        }
        let name = if self.name.is_empty() { self.controller.as_str().to_string() } else { self.name.clone() };
        Ok(Scenario {
            name,
            params,
            fluid,
            uncertainty,
            controller: self.controller,
            gains,
            network: self.network,
            integrator: self.integrator,
            t_end: tl.t_end,
            initial: self.initial,
            reference: self.reference,
            measurement: self.measurement,
            saturation: self.saturation,
        })
    }

    pub fn set_uncertainty(&mut self, on: bool) {
        self.uncertainty = on.then(UncertaintySpec::default);
    }
}

pub const PRESET_NAMES: [&str; 5] = ["paper-free", "paper-simple", "paper-composite", "paper-smc", "paper-oracle"];

/// Built-in scenarios with the reference plant, gains and uncertainty.
pub fn preset(name: &str, uncertainty: bool) -> Result<ScenarioConfig> {
    let controller = match name {
        "paper-free" => ControllerKind::None,
        "paper-simple" => ControllerKind::Simple,
        "paper-composite" => ControllerKind::Composite,
        "paper-smc" => ControllerKind::Smc,
        "paper-oracle" => ControllerKind::Oracle,
        other => {
            return Err(Error::validation(
                "preset",
                format!("unknown preset `{other}` (known: {})", PRESET_NAMES.join(", ")),
            ))
        }
    };
    let suffix = if uncertainty { "unc" } else { "nominal" };
    Ok(ScenarioConfig {
        name: format!("{}-{suffix}", controller.as_str()),
        plant: PlantConfig::default(),
        fluid: FluidConfig::default(),
        uncertainty: uncertainty.then(UncertaintySpec::default),
        controller,
        gains: GainsConfig::default(),
        network: NetworkSettings::default(),
        integrator: IntegratorSettings::default(),
        timeline: Timeline::default(),
        initial: InitialConditions::default(),
        reference: Reference::default(),
        measurement: Measurement::default(),
        saturation: None,
        outputs: Outputs::default(),
    })
}

/// A preset name or a path to a config/manifest file.
pub fn resolve(spec: &str, uncertainty: Option<bool>) -> Result<ScenarioConfig> {
    let mut cfg = if PRESET_NAMES.contains(&spec) {
        preset(spec, uncertainty.unwrap_or(false))?
    } else if Path::new(spec).exists() {
        ScenarioConfig::load(spec)?
    } else {
        return Err(Error::validation(
            "scenario",
            format!("`{spec}` is neither a preset ({}) nor an existing file", PRESET_NAMES.join(", ")),
        ));
    };
    if let Some(on) = uncertainty {
        cfg.set_uncertainty(on);
    }
    Ok(cfg)
}
