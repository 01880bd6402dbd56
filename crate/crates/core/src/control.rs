//! Sliding surfaces, the feedback-error-learning command, the sliding-mode
//! baseline and Lyapunov diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::State2DOF;
use crate::rbf::EstimatorState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    /// No actuation.
    None,
    /// FEL with Ŵ̇ = Γ·μ·s.
    Simple,
    /// FEL with Ŵ̇ = Γ·μ·(s − k_D·s_D) and the state observer.
    Composite,
    /// FEL command with Δ̂ dropped.
    Smc,
    /// FEL command with Δ̂ replaced by the true Δ.
    Oracle,
}

impl ControllerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ControllerKind::None => "none",
            ControllerKind::Simple => "simple",
            ControllerKind::Composite => "composite",
            ControllerKind::Smc => "smc",
            ControllerKind::Oracle => "oracle",
        }
    }

    pub fn learns(&self) -> bool {
        matches!(self, ControllerKind::Simple | ControllerKind::Composite)
    }
}

impl std::str::FromStr for ControllerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "none" => ControllerKind::None,
            "simple" => ControllerKind::Simple,
            "composite" => ControllerKind::Composite,
            "smc" => ControllerKind::Smc,
            "oracle" => ControllerKind::Oracle,
            other => return Err(Error::validation("controller", format!("unknown controller `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerGains {
    /// Sliding-surface slope λ, 1/s.
    pub lambda: f64,
    /// Control gain k_C, 1/s.
    pub k_c: f64,
    /// Learning rate Γ.
    pub gamma: f64,
    /// Composite coupling k_D.
    pub k_d: f64,
    /// Observer surface slope λ_D, 1/s.
    pub lambda_d: f64,
    /// Observer gain k_SE, 1/s.
    pub k_se: f64,
    /// Controller activation time, s.
    pub t_ctrl_on: f64,
}

impl Default for ControllerGains {
    fn default() -> Self {
        ControllerGains {
            lambda: 12.0,
            k_c: 1.5,
            gamma: 1.5,
            k_d: 6.0,
            lambda_d: 0.01,
            k_se: 0.01,
            t_ctrl_on: 100.0,
        }
    }
}

impl ControllerGains {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("lambda", self.lambda), ("k_c", self.k_c), ("gamma", self.gamma)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(name, format!("must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("k_d", self.k_d),
            ("lambda_d", self.lambda_d),
            ("k_se", self.k_se),
            ("t_ctrl_on", self.t_ctrl_on),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::validation(name, format!("must be non-negative, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TrackingSignals {
    pub e: f64,
    pub e_dot: f64,
    pub s: f64,
    pub e_d: f64,
    pub e_d_dot: f64,
    pub s_d: f64,
}

pub fn tracking_signals(
    state: &State2DOF,
    est: &EstimatorState,
    y_d: f64,
    y_d_dot: f64,
    gains: &ControllerGains,
) -> TrackingSignals {
    let e = state.y - y_d;
    let e_dot = state.y_dot - y_d_dot;
    let e_d = est.y_hat - state.y;
    let e_d_dot = est.y_hat_dot - state.y_dot;
    TrackingSignals {
        e,
        e_dot,
        s: e_dot + gains.lambda * e,
        e_d,
        e_d_dot,
        s_d: e_d_dot + gains.lambda_d * e_d,
    }
}

/// u = b⁻¹·(−f − Δ̂ + ÿ_d − k_C·s − λ·ė).
pub fn fel_command(
    f: f64,
    b: f64,
    delta_hat: f64,
    y_d_ddot: f64,
    sig: &TrackingSignals,
    gains: &ControllerGains,
) -> Result<f64> {
    if b == 0.0 || !b.is_finite() {
        return Err(Error::SingularGain(b));
    }
    Ok((-f - delta_hat + y_d_ddot - gains.k_c * sig.s - gains.lambda * sig.e_dot) / b)
}

pub fn smc_command(f: f64, b: f64, y_d_ddot: f64, sig: &TrackingSignals, gains: &ControllerGains) -> Result<f64> {
    fel_command(f, b, 0.0, y_d_ddot, sig, gains)
}

/// ½(s² + Γ⁻¹·ŴᵀŴ). Ŵ stands in for W̃ = Ŵ − W since W is unknown.
pub fn lyapunov_simple(s: f64, weights: &[f64], gamma: f64) -> f64 {
    let ww: f64 = weights.iter().map(|w| w * w).sum();
    0.5 * (s * s + ww / gamma)
}

/// ½(s² + k_D·s_D² + Γ⁻¹·ŴᵀŴ), same Ŵ substitution.
pub fn lyapunov_composite(s: f64, s_d: f64, k_d: f64, weights: &[f64], gamma: f64) -> f64 {
    let ww: f64 = weights.iter().map(|w| w * w).sum();
    0.5 * (s * s + k_d * s_d * s_d + ww / gamma)
}
