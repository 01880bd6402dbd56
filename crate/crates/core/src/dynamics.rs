//! Equations of motion of the spring-mounted cylinder and the fixed-step
//! integrators that advance the coupled cylinder + wake + observer state.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FluidForces, PlantParams, State2DOF};
use crate::rbf::{state_estimator_accel, EstimatorState};
use crate::replay::{ForceProvider, ReplayProvider};
use crate::uncertainty::UncertaintySpec;
use crate::wake::{fluid_forces, wake_derivative, WakeParams, WakeState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccelPair {
    pub x_ddot: f64,
    pub y_ddot: f64,
}

/// ẍ = (f_D − K·x)/m and ÿ = (f_L − K·y)/m + b·f_C + Δ.
pub fn acceleration(params: &PlantParams, state: &State2DOF, forces: &FluidForces, f_c: f64, delta: f64) -> AccelPair {
    AccelPair {
        x_ddot: (forces.drag - params.stiffness * state.x) / params.mass,
        y_ddot: (forces.lift - params.stiffness * state.y) / params.mass + params.input_gain * f_c + delta,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Rk4,
    SemiImplicitEuler,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSettings {
    pub dt: f64,
    #[serde(default = "default_log_every")]
    pub log_every: usize,
    #[serde(default)]
    pub method: Method,
    /// Controller and network update every this many integrator steps.
    #[serde(default = "default_control_divisor")]
    pub control_divisor: usize,
}

fn default_log_every() -> usize {
    10
}
fn default_control_divisor() -> usize {
    1
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        IntegratorSettings { dt: 0.005, log_every: 10, method: Method::Rk4, control_divisor: 1 }
    }
}

impl IntegratorSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::validation("dt", format!("must be positive, got {}", self.dt)));
        }
        if self.log_every == 0 {
            return Err(Error::validation("log_every", "must be at least 1"));
        }
        if self.control_divisor == 0 {
            return Err(Error::validation("control_divisor", "must be at least 1"));
        }
        Ok(())
    }
}

/// Classic fourth-order Runge–Kutta step.
pub fn rk4_step<const N: usize, F>(rhs: F, t: f64, y: &[f64; N], dt: f64) -> [f64; N]
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let shifted = |base: &[f64; N], k: &[f64; N], h: f64| {
        let mut out = *base;
        for i in 0..N {
            out[i] += h * k[i];
        }
        out
    };
    let k1 = rhs(t, y);
    let k2 = rhs(t + 0.5 * dt, &shifted(y, &k1, 0.5 * dt));
    let k3 = rhs(t + 0.5 * dt, &shifted(y, &k2, 0.5 * dt));
    let k4 = rhs(t + dt, &shifted(y, &k3, dt));
    let mut out = *y;
    for i in 0..N {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Symplectic Euler for a state laid out as (position, velocity) pairs:
/// velocities are updated first and the new velocities move the positions.
pub fn semi_implicit_euler_step<const N: usize, F>(rhs: F, t: f64, y: &[f64; N], dt: f64) -> [f64; N]
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    debug_assert!(N.is_multiple_of(2));
    let k = rhs(t, y);
    let mut out = *y;
    for i in (0..N).step_by(2) {
        out[i + 1] += dt * k[i + 1];
        out[i] += dt * out[i + 1];
    }
    out
}

pub fn integrate<const N: usize, F>(method: Method, rhs: F, t: f64, y: &[f64; N], dt: f64) -> [f64; N]
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    match method {
        Method::Rk4 => rk4_step(rhs, t, y, dt),
        Method::SemiImplicitEuler => semi_implicit_euler_step(rhs, t, y, dt),
    }
}

/// Source of the fluid forces.
#[derive(Debug, Clone)]
pub enum FluidModel {
    Off,
    Wake(WakeParams),
    Replay(Arc<ReplayProvider>),
}

impl FluidModel {
    pub fn forces(&self, params: &PlantParams, t: f64, wake: &WakeState, body: &State2DOF) -> FluidForces {
        match self {
            FluidModel::Off => FluidForces::default(),
            FluidModel::Wake(wp) => fluid_forces(wp, params, wake, body),
            FluidModel::Replay(p) => p.forces(t),
        }
    }
}

/// Cylinder, wake variable and observer, integrated together.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CoupledState {
    pub body: State2DOF,
    pub wake: WakeState,
    pub observer: EstimatorState,
}

const FIELD_NAMES: [&str; 8] = ["x", "x_dot", "y", "y_dot", "q", "q_dot", "y_hat", "y_hat_dot"];

impl CoupledState {
    pub fn to_array(&self) -> [f64; 8] {
        [
            self.body.x,
            self.body.x_dot,
            self.body.y,
            self.body.y_dot,
            self.wake.q,
            self.wake.q_dot,
            self.observer.y_hat,
            self.observer.y_hat_dot,
        ]
    }

    pub fn from_array(a: &[f64; 8]) -> Self {
        CoupledState {
            body: State2DOF { x: a[0], x_dot: a[1], y: a[2], y_dot: a[3] },
            wake: WakeState { q: a[4], q_dot: a[5] },
            observer: EstimatorState { y_hat: a[6], y_hat_dot: a[7] },
        }
    }
}

/// Observer gains, present only under composite learning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObserverGains {
    pub lambda_d: f64,
    pub k_se: f64,
}

/// Control command and estimate held constant over an integrator step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Held {
    pub u: f64,
    pub delta_hat: f64,
}

pub struct CoupledPlant<'a> {
    pub params: &'a PlantParams,
    pub fluid: &'a FluidModel,
    pub uncertainty: &'a UncertaintySpec,
    pub observer: Option<ObserverGains>,
}

impl CoupledPlant<'_> {
    pub fn rates(&self, t: f64, s: &[f64; 8], held: Held) -> [f64; 8] {
        let st = CoupledState::from_array(s);
        let body = st.body;
        let forces = self.fluid.forces(self.params, t, &st.wake, &body);
        let delta = self.uncertainty.delta(t, &body, held.u, self.params).total();
        let acc = acceleration(self.params, &body, &forces, held.u, delta);

        let (q_dot, q_ddot) = match self.fluid {
            FluidModel::Wake(wp) => wake_derivative(wp, self.params, &st.wake, acc.y_ddot),
            _ => (0.0, 0.0),
        };

        let (yh_dot, yh_ddot) = match self.observer {
            Some(g) => {
                let f = (forces.lift - self.params.stiffness * body.y) / self.params.mass;
                let e_d = st.observer.y_hat - body.y;
                let e_d_dot = st.observer.y_hat_dot - body.y_dot;
                let s_d = e_d_dot + g.lambda_d * e_d;
                let acc_hat = state_estimator_accel(
                    f,
                    self.params.input_gain,
                    held.u,
                    held.delta_hat,
                    s_d,
                    e_d_dot,
                    g.k_se,
                    g.lambda_d,
                );
                (st.observer.y_hat_dot, acc_hat)
            }
            None => (0.0, 0.0),
        };

        [body.x_dot, acc.x_ddot, body.y_dot, acc.y_ddot, q_dot, q_ddot, yh_dot, yh_ddot]
    }

    /// Advances one step with `held` applied throughout.
    pub fn step(&self, state: &CoupledState, method: Method, held: Held, t: f64, dt: f64) -> Result<CoupledState> {
        let next = integrate(method, |tt, s| self.rates(tt, s, held), t, &state.to_array(), dt);
        if let Some(i) = next.iter().position(|v| !v.is_finite() || v.abs() > 1e12) {
            return Err(Error::Divergence { t: t + dt, field: FIELD_NAMES[i] });
        }
        Ok(CoupledState::from_array(&next))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn params() -> PlantParams {
        PlantParams::reference()
    }

    #[test]
    fn spring_only() {
        let s = State2DOF { x: 1.0, ..Default::default() };
        let a = acceleration(&params(), &s, &FluidForces::default(), 0.0, 0.0);
        assert_relative_eq!(a.x_ddot, -1.5786, epsilon = 1e-4);
        assert_eq!(a.y_ddot, 0.0);
    }

    #[test]
    fn equilibrium() {
        let a = acceleration(&params(), &State2DOF::default(), &FluidForces::default(), 0.0, 0.0);
        assert_eq!((a.x_ddot, a.y_ddot), (0.0, 0.0));
    }

    #[test]
    fn lift_over_mass() {
        let f = FluidForces { lift: 1.571, drag: 0.0 };
        let a = acceleration(&params(), &State2DOF::default(), &f, 0.0, 0.0);
        assert_relative_eq!(a.y_ddot, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_state_stays_zero() {
        let p = params();
        let fluid = FluidModel::Off;
        let unc = UncertaintySpec::off();
        let plant = CoupledPlant { params: &p, fluid: &fluid, uncertainty: &unc, observer: None };
        let mut s = CoupledState::default();
        for n in 0..1000 {
            s = plant.step(&s, Method::Rk4, Held::default(), n as f64 * 0.01, 0.01).unwrap();
        }
        assert_eq!(s, CoupledState::default());
    }

    #[test]
    fn divergence_names_field() {
        let p = params();
        let fluid = FluidModel::Off;
        let unc = UncertaintySpec::off();
        let plant = CoupledPlant { params: &p, fluid: &fluid, uncertainty: &unc, observer: None };
        let held = Held { u: f64::INFINITY, delta_hat: 0.0 };
        match plant.step(&CoupledState::default(), Method::Rk4, held, 3.0, 0.01) {
            Err(Error::Divergence { t, field }) => {
                assert_eq!(field, "y");
                assert_relative_eq!(t, 3.01);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn semi_implicit_euler_tracks_oscillator() {
        let w2 = 4.0;
        let rhs = |_t: f64, s: &[f64; 2]| [s[1], -w2 * s[0]];
        let mut s = [1.0, 0.0];
        let dt = 1e-4;
        let n = (std::f64::consts::PI / dt).round() as usize;
        for i in 0..n {
            s = semi_implicit_euler_step(rhs, i as f64 * dt, &s, dt);
        }
        // One full period of cos(2t).
        assert!((s[0] - 1.0).abs() < 1e-3);
    }

    proptest! {
        #[test]
        fn superposition(
            fl in -2.0..2.0f64, fd in -2.0..2.0f64, fc in -2.0..2.0f64, d in -2.0..2.0f64,
            k in -3.0..3.0f64,
        ) {
            let p = params();
            let s = State2DOF::default();
            let one = acceleration(&p, &s, &FluidForces { lift: fl, drag: fd }, fc, d);
            let scaled = acceleration(&p, &s, &FluidForces { lift: k * fl, drag: k * fd }, k * fc, k * d);
            prop_assert!((scaled.x_ddot - k * one.x_ddot).abs() < 1e-12);
            prop_assert!((scaled.y_ddot - k * one.y_ddot).abs() < 1e-12);
        }

        #[test]
        fn control_never_reaches_streamwise(x in -1.0..1.0f64, fd in -2.0..2.0f64, fc in -100.0..100.0f64) {
            let p = params();
            let s = State2DOF { x, ..Default::default() };
            let f = FluidForces { lift: 0.3, drag: fd };
            let a = acceleration(&p, &s, &f, 0.0, 0.0);
            let b = acceleration(&p, &s, &f, fc, 0.0);
            prop_assert_eq!(a.x_ddot.to_bits(), b.x_ddot.to_bits());
        }
    }
}
