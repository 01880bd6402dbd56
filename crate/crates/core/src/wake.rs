//! Wake-oscillator surrogate for the fluid forces.
//!
//! The wake variable q obeys an acceleration-coupled van der Pol equation
//!
//! ```text
//! q̈ + ε·ω_s·(q² − 1)·q̇ + ω_s²·q = (A/D)·ÿ,   ω_s = 2π·St·U/D
//! ```
//!
//! and sets the lift coefficient C_L = (C_L0/2)·q. Drag carries a q² term,
//! which fluctuates at twice the shedding frequency and traces the
//! figure-eight orbit. Motion of the cylinder adds quasi-steady drag
//! damping in both directions.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FluidForces, PlantParams, State2DOF};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WakeParams {
    /// Strouhal number.
    #[serde(rename = "St")]
    pub strouhal: f64,
    /// van der Pol nonlinearity ε.
    pub eps_w: f64,
    /// Acceleration coupling gain A.
    #[serde(rename = "A_c")]
    pub coupling: f64,
    /// Lift coefficient amplitude of the fixed cylinder.
    #[serde(rename = "C_L0")]
    pub c_l0: f64,
    /// Mean drag coefficient.
    #[serde(rename = "C_D0")]
    pub c_d0: f64,
    /// Drag fluctuation gain on q².
    pub beta_d: f64,
    /// Multiplier on the quasi-steady drag damping of cylinder motion
    /// (1 gives ½ρUD·C_D0·ẏ transverse and ρUD·C_D0·ẋ in-line).
    #[serde(default = "default_fluid_damping")]
    pub fluid_damping: f64,
}

fn default_fluid_damping() -> f64 {
    1.0
}

impl Default for WakeParams {
    fn default() -> Self {
        WakeParams {
            strouhal: 0.183,
            eps_w: 0.3,
            coupling: 11.0,
            c_l0: 0.23,
            c_d0: 1.15,
            beta_d: 0.2,
            fluid_damping: 1.0,
        }
    }
}

impl WakeParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("St", self.strouhal),
            ("eps_w", self.eps_w),
            ("C_L0", self.c_l0),
            ("C_D0", self.c_d0),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(name, format!("must be positive, got {v}")));
            }
        }
        for (name, v) in [("beta_d", self.beta_d), ("fluid_damping", self.fluid_damping)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::validation(name, format!("must be non-negative, got {v}")));
            }
        }
        if !self.coupling.is_finite() {
            return Err(Error::validation("A_c", "must be finite"));
        }
        Ok(())
    }

    /// Shedding angular frequency ω_s = 2π·St·U/D.
    pub fn shedding_omega(&self, params: &PlantParams) -> f64 {
        2.0 * PI * self.strouhal * params.velocity / params.diameter
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct WakeState {
    pub q: f64,
    pub q_dot: f64,
}

/// Returns (q̇, q̈) for the given transverse acceleration of the cylinder.
pub fn wake_derivative(wp: &WakeParams, params: &PlantParams, ws: &WakeState, y_ddot: f64) -> (f64, f64) {
    let omega = wp.shedding_omega(params);
    let q_ddot = -wp.eps_w * omega * (ws.q * ws.q - 1.0) * ws.q_dot - omega * omega * ws.q
        + wp.coupling / params.diameter * y_ddot;
    (ws.q_dot, q_ddot)
}

/// Forces on a stationary cylinder for the given wake state.
pub fn forces_from_wake(wp: &WakeParams, params: &PlantParams, ws: &WakeState) -> FluidForces {
    let scale = params.force_scale();
    FluidForces {
        lift: scale * 0.5 * wp.c_l0 * ws.q,
        drag: scale * (wp.c_d0 + wp.beta_d * ws.q * ws.q),
    }
}

/// Wake forces plus quasi-steady drag damping of the moving cylinder.
pub fn fluid_forces(wp: &WakeParams, params: &PlantParams, ws: &WakeState, body: &State2DOF) -> FluidForces {
    let base = forces_from_wake(wp, params, ws);
    let damping = wp.fluid_damping * 0.5 * params.density * params.velocity * params.diameter * wp.c_d0;
    FluidForces {
        lift: base.lift - damping * body.y_dot,
        drag: base.drag - 2.0 * damping * body.x_dot,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn rest_point() {
        let p = PlantParams::reference();
        let (a, b) = wake_derivative(&WakeParams::default(), &p, &WakeState::default(), 0.0);
        assert_eq!((a, b), (0.0, 0.0));
    }

    #[test]
    fn restoring_term() {
        let p = PlantParams::reference();
        let ws = WakeState { q: 1.0, q_dot: 0.0 };
        let (_, qdd) = wake_derivative(&WakeParams::default(), &p, &ws, 0.0);
        assert_relative_eq!(qdd, -1.3220, epsilon = 1e-4);
    }

    #[test]
    fn calibrated_coefficients() {
        let p = PlantParams::reference();
        let wp = WakeParams::default();
        let f = forces_from_wake(&wp, &p, &WakeState { q: 2.0, q_dot: 0.0 });
        assert_relative_eq!(f.lift, 0.08986, epsilon = 1e-5);
        assert_relative_eq!(f.lift / p.force_scale(), 0.23, epsilon = 1e-12);
        let f0 = forces_from_wake(&wp, &p, &WakeState::default());
        assert_eq!(f0.lift, 0.0);
        assert_relative_eq!(f0.drag, 0.4493, epsilon = 1e-4);
    }

    #[test]
    fn zero_density_no_force() {
        let mut p = PlantParams::reference();
        p.density = 0.0;
        let f = forces_from_wake(&WakeParams::default(), &p, &WakeState { q: 1.7, q_dot: 0.3 });
        assert_eq!(f.lift, 0.0);
        assert_eq!(f.drag, 0.0);
    }

    #[test]
    fn damping_opposes_motion() {
        let p = PlantParams::reference();
        let wp = WakeParams::default();
        let body = State2DOF { x_dot: 0.1, y_dot: 0.2, ..Default::default() };
        let still = forces_from_wake(&wp, &p, &WakeState::default());
        let moving = fluid_forces(&wp, &p, &WakeState::default(), &body);
        assert!(moving.lift < still.lift);
        assert!(moving.drag < still.drag);
    }

    proptest! {
        #[test]
        fn lift_odd_drag_even(q in -4.0..4.0f64) {
            let p = PlantParams::reference();
            let wp = WakeParams::default();
            let a = forces_from_wake(&wp, &p, &WakeState { q, q_dot: 0.0 });
            let b = forces_from_wake(&wp, &p, &WakeState { q: -q, q_dot: 0.0 });
            prop_assert_eq!(a.lift, -b.lift);
            prop_assert_eq!(a.drag, b.drag);
        }
    }
}
