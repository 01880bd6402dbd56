//! Lumped model uncertainty Δ = Δ₁(y, ẏ) + Δ₂·u + Δ₃(t) acting on the
//! transverse channel, switched on at `t_on`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{PlantParams, State2DOF};

/// How the stiffness-error term Δ₁ = −k1·K·y enters the transverse acceleration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StiffnessScaling {
    /// Δ₁ = −k1·K·y/m, a fractional stiffness error in acceleration units.
    #[default]
    Acceleration,
    /// Δ₁ = −k1·K·y added to ÿ as written, without dividing by m.
    Force,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UncertaintySpec {
    /// Stiffness error fraction.
    pub k1: f64,
    /// Actuator ineffectiveness fraction, Δ₂ = −k2·b.
    pub k2: f64,
    /// Disturbance amplitude, m/s².
    pub d3_amp: f64,
    /// Disturbance angular frequency, rad/s.
    pub d3_omega: f64,
    /// Activation time, s.
    pub t_on: f64,
    #[serde(default)]
    pub scaling: StiffnessScaling,
}

impl Default for UncertaintySpec {
    fn default() -> Self {
        UncertaintySpec {
            k1: 0.2,
            k2: 0.2,
            d3_amp: 0.5,
            d3_omega: PI / 2.0,
            t_on: 105.0,
            scaling: StiffnessScaling::Acceleration,
        }
    }
}

/// Individual contributions of one evaluation, all in m/s².
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DeltaParts {
    pub stiffness: f64,
    pub actuator: f64,
    pub disturbance: f64,
}

impl DeltaParts {
    pub fn total(&self) -> f64 {
        self.stiffness + self.actuator + self.disturbance
    }
}

impl UncertaintySpec {
    /// Never activates.
    pub fn off() -> Self {
        UncertaintySpec {
            t_on: f64::INFINITY,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k2 == 1.0 {
            return Err(Error::Uncontrollable);
        }
        if !(0.0..1.0).contains(&self.k2) {
            return Err(Error::validation("k2", format!("must lie in [0, 1), got {}", self.k2)));
        }
        if !(self.t_on >= 0.0) {
            return Err(Error::validation("t_on", format!("must be non-negative, got {}", self.t_on)));
        }
        for (name, v) in [("k1", self.k1), ("d3_amp", self.d3_amp), ("d3_omega", self.d3_omega)] {
            if !v.is_finite() {
                return Err(Error::validation(name, "must be finite"));
            }
        }
        Ok(())
    }

    pub fn is_active(&self, t: f64) -> bool {
        t >= self.t_on
    }

    /// Δ₁ and Δ₃ only: the part of Δ that does not depend on u.
    pub fn input_free_part(&self, t: f64, state: &State2DOF, params: &PlantParams) -> f64 {
        let p = self.delta(t, state, 0.0, params);
        p.stiffness + p.disturbance
    }

    pub fn delta(&self, t: f64, state: &State2DOF, u: f64, params: &PlantParams) -> DeltaParts {
        if !self.is_active(t) {
            return DeltaParts::default();
        }
        let stiffness = match self.scaling {
            StiffnessScaling::Acceleration => -self.k1 * params.stiffness * state.y * params.input_gain,
            StiffnessScaling::Force => -self.k1 * params.stiffness * state.y,
        };
        DeltaParts {
            stiffness,
            actuator: -self.k2 * params.input_gain * u,
            disturbance: self.d3_amp * (self.d3_omega * t).sin(),
        }
    }

    /// b before activation, (1 − k2)·b after.
    pub fn effective_input_gain(&self, params: &PlantParams, t: f64) -> Result<f64> {
        if self.k2 == 1.0 {
            return Err(Error::Uncontrollable);
        }
        if !(0.0..1.0).contains(&self.k2) {
            return Err(Error::validation("k2", format!("must lie in [0, 1), got {}", self.k2)));
        }
        Ok(if self.is_active(t) {
            (1.0 - self.k2) * params.input_gain
        } else {
            params.input_gain
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn plant() -> PlantParams {
        PlantParams::reference()
    }

    #[test]
    fn inactive_before_onset() {
        let s = State2DOF { y: 0.3, y_dot: 1.0, ..Default::default() };
        let d = UncertaintySpec::default().delta(104.9, &s, 2.0, &plant());
        assert_eq!(d, DeltaParts::default());
    }

    #[test]
    fn default_values_at_106() {
        let s = State2DOF { y: 0.1, ..Default::default() };
        let d = UncertaintySpec::default().delta(106.0, &s, 1.0, &plant());
        assert_relative_eq!(d.stiffness, -0.03157, epsilon = 1e-5);
        assert_relative_eq!(d.actuator, -0.12731, epsilon = 1e-5);
        assert!(d.disturbance.abs() < 1e-12);
        assert_relative_eq!(d.total(), -0.15888, epsilon = 1e-5);
    }

    #[test]
    fn peak_disturbance_at_onset() {
        let d = UncertaintySpec::default().delta(105.0, &State2DOF::default(), 0.0, &plant());
        assert_relative_eq!(d.total(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn force_scaling_skips_mass() {
        let spec = UncertaintySpec { scaling: StiffnessScaling::Force, ..Default::default() };
        let s = State2DOF { y: 0.1, ..Default::default() };
        let d = spec.delta(106.0, &s, 0.0, &plant());
        assert_relative_eq!(d.stiffness, -0.2 * 2.48 * 0.1, epsilon = 1e-12);
    }

    #[test]
    fn effective_gain() {
        let spec = UncertaintySpec::default();
        assert_relative_eq!(spec.effective_input_gain(&plant(), 0.0).unwrap(), 0.63654, epsilon = 1e-5);
        assert_relative_eq!(spec.effective_input_gain(&plant(), 105.0).unwrap(), 0.50923, epsilon = 1e-5);
        let dead = UncertaintySpec { k2: 1.0, ..spec };
        assert!(matches!(dead.effective_input_gain(&plant(), 0.0), Err(Error::Uncontrollable)));
        assert!(matches!(dead.validate(), Err(Error::Uncontrollable)));
    }

    #[test]
    fn off_never_activates() {
        let spec = UncertaintySpec::off();
        assert!(!spec.is_active(1e12));
        spec.validate().unwrap();
    }

    proptest! {
        #[test]
        fn zero_before_onset(t in 0.0..105.0f64, y in -2.0..2.0f64, u in -10.0..10.0f64) {
            let s = State2DOF { y, ..Default::default() };
            let d = UncertaintySpec::default().delta(t, &s, u, &plant());
            prop_assert_eq!(d, DeltaParts::default());
        }

        #[test]
        fn disturbance_bounded(t in 0.0..1e4f64) {
            let spec = UncertaintySpec::default();
            let d = spec.delta(t, &State2DOF::default(), 0.0, &plant());
            prop_assert!(d.disturbance.abs() <= spec.d3_amp);
        }

        #[test]
        fn affine_in_input(t in 105.0..300.0f64, y in -1.0..1.0f64, u in -5.0..5.0f64) {
            let spec = UncertaintySpec::default();
            let s = State2DOF { y, ..Default::default() };
            let full = spec.delta(t, &s, u, &plant()).total();
            let free = spec.input_free_part(t, &s, &plant());
            let expected = free - spec.k2 * plant().input_gain * u;
            prop_assert!((full - expected).abs() < 1e-12);
        }
    }
}
