//! The closed loop: measurement, estimation, control, network update and
//! one integrator step, repeated to `t_end`, with decimated logging.

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::config::Scenario;
use crate::control::{
    fel_command, lyapunov_composite, lyapunov_simple, smc_command, tracking_signals, ControllerKind,
};
use crate::dynamics::{CoupledPlant, CoupledState, Held, ObserverGains};
use crate::error::{Error, Result};
use crate::model::State2DOF;
use crate::rbf::{default_input_scales, EstimatorState, RbfNetwork};
use crate::wake::WakeState;

pub const CSV_HEADER: [&str; 14] = [
    "t", "x", "x_dot", "y", "y_dot", "f_L", "f_D", "u", "delta_true", "delta_hat", "s", "s_D", "W_norm", "V_proxy",
];

/// One logged row. Signals that do not exist for the running controller are `None`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub x: f64,
    pub x_dot: f64,
    pub y: f64,
    pub y_dot: f64,
    pub f_l: f64,
    pub f_d: f64,
    pub u: f64,
    pub delta_true: f64,
    pub delta_hat: Option<f64>,
    pub s: f64,
    pub s_d: Option<f64>,
    /// ‖Ŵ‖∞.
    pub w_norm: Option<f64>,
    pub v_proxy: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TimeSeries {
    pub samples: Vec<Sample>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn column(&self, f: impl Fn(&Sample) -> f64) -> Vec<f64> {
        self.samples.iter().map(f).collect()
    }

    /// Samples with `from <= t <= to`.
    pub fn window(&self, from: f64, to: f64) -> &[Sample] {
        let lo = self.samples.partition_point(|s| s.t < from - 1e-9);
        let hi = self.samples.partition_point(|s| s.t <= to + 1e-9);
        &self.samples[lo..hi.max(lo)]
    }

    /// Output sampling interval, taken from the first two rows.
    pub fn sample_interval(&self) -> Option<f64> {
        match self.samples.as_slice() {
            [a, b, ..] => Some(b.t - a.t),
            _ => None,
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        for s in &self.samples {
            w.write_record([
                s.t.to_string(),
                s.x.to_string(),
                s.x_dot.to_string(),
                s.y.to_string(),
                s.y_dot.to_string(),
                s.f_l.to_string(),
                s.f_d.to_string(),
                s.u.to_string(),
                s.delta_true.to_string(),
                opt(s.delta_hat),
                s.s.to_string(),
                opt(s.s_d),
                opt(s.w_norm),
                opt(s.v_proxy),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let headers = rdr.headers().map_err(|e| Error::Parse { line: 1, message: e.to_string() })?;
        if headers.iter().ne(CSV_HEADER) {
            return Err(Error::Parse { line: 1, message: format!("expected header `{}`", CSV_HEADER.join(",")) });
        }
        let mut samples = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| Error::Parse { line, message: e.to_string() })?;
            let field = |k: usize| -> Result<Option<f64>> {
                let raw = rec.get(k).unwrap_or("");
                if raw.is_empty() {
                    return Ok(None);
                }
                raw.parse::<f64>()
                    .map(Some)
                    .map_err(|_| Error::Parse { line, message: format!("bad number `{raw}` in column {}", CSV_HEADER[k]) })
            };
            let req = |k: usize| -> Result<f64> {
                field(k)?.ok_or_else(|| Error::Parse { line, message: format!("missing {}", CSV_HEADER[k]) })
            };
            samples.push(Sample {
                t: req(0)?,
                x: req(1)?,
                x_dot: req(2)?,
                y: req(3)?,
                y_dot: req(4)?,
                f_l: req(5)?,
                f_d: req(6)?,
                u: req(7)?,
                delta_true: req(8)?,
                delta_hat: field(9)?,
                s: req(10)?,
                s_d: field(11)?,
                w_norm: field(12)?,
                v_proxy: field(13)?,
            });
        }
        Ok(TimeSeries { samples })
    }
}

pub struct SimOutput {
    pub series: TimeSeries,
    /// Final network for learning controllers.
    pub network: Option<RbfNetwork>,
    /// Set when the run stopped early; `series` then holds the rows logged so far.
    pub failure: Option<Error>,
}

/// Number of integrator steps needed to reach `t_end`.
pub fn step_count(t_end: f64, dt: f64) -> usize {
    (t_end / dt + 1e-9).floor() as usize
}

/// Runs the scenario, keeping whatever was logged if the run diverges.
pub fn simulate_partial(sc: &Scenario) -> SimOutput {
    let params = &sc.params;
    let gains = &sc.gains;
    let kind = sc.controller;
    let dt = sc.integrator.dt;
    let n_steps = step_count(sc.t_end, dt);
    let divisor = sc.integrator.control_divisor;

    let mut network = if kind.learns() {
        match RbfNetwork::random(&sc.network, default_input_scales(params)) {
            Ok(n) => Some(n),
            Err(e) => return SimOutput { series: TimeSeries::default(), network: None, failure: Some(e) },
        }
    } else {
        None
    };
    let observer =
        (kind == ControllerKind::Composite).then_some(ObserverGains { lambda_d: gains.lambda_d, k_se: gains.k_se });
    let plant = CoupledPlant { params, fluid: &sc.fluid, uncertainty: &sc.uncertainty, observer };

    let y0 = sc.initial.y.unwrap_or(0.001 * params.diameter);
    let mut state = CoupledState {
        body: State2DOF { x: sc.initial.x, x_dot: sc.initial.x_dot, y: y0, y_dot: sc.initial.y_dot },
        wake: WakeState { q: sc.initial.q, q_dot: sc.initial.q_dot },
        observer: EstimatorState { y_hat: y0, y_hat_dot: sc.initial.y_dot },
    };

    let mut noise = (sc.measurement.lift_noise_std > 0.0).then(|| {
        (
            ChaCha8Rng::seed_from_u64(sc.network.seed.wrapping_add(1)),
            Normal::new(0.0, sc.measurement.lift_noise_std).expect("std validated"),
        )
    });

    let capacity = n_steps / sc.integrator.log_every + 1;
    let mut series = TimeSeries { samples: Vec::with_capacity(capacity) };
    let mut held = Held::default();
    let mut u_prev = 0.0;
    let mut features: Vec<f64> = Vec::new();
    let mut drive = 0.0;
    let mut delta_hat_log: Option<f64> = None;

    for n in 0..=n_steps {
        let t = n as f64 * dt;
        let body = state.body;
        let forces = sc.fluid.forces(params, t, &state.wake, &body);
        let (y_d, y_d_dot, y_d_ddot) = sc.reference.at(t);
        let sig = tracking_signals(&body, &state.observer, y_d, y_d_dot, gains);

        if n % divisor == 0 {
            let measured_lift = match noise.as_mut() {
                Some((rng, dist)) => forces.lift + dist.sample(rng),
                None => forces.lift,
            };
            let f = (measured_lift - params.stiffness * body.y) / params.mass;
            let active = t >= gains.t_ctrl_on && kind != ControllerKind::None;
            let b = params.input_gain;

            let command = match kind {
                ControllerKind::None => Ok((0.0, None)),
                ControllerKind::Smc => {
                    if active {
                        smc_command(f, b, y_d_ddot, &sig, gains).map(|u| (u, None))
                    } else {
                        Ok((0.0, None))
                    }
                }
                ControllerKind::Simple | ControllerKind::Composite => {
                    let net = network.as_ref().expect("learning controllers own a network");
                    features = net.features(&[body.y, body.y_dot, u_prev, measured_lift]);
                    let dh = net.output(&features);
                    drive = if kind == ControllerKind::Composite { sig.s - gains.k_d * sig.s_d } else { sig.s };
                    if active {
                        fel_command(f, b, dh, y_d_ddot, &sig, gains).map(|u| (u, Some(dh)))
                    } else {
                        Ok((0.0, Some(dh)))
                    }
                }
                ControllerKind::Oracle => {
                    if active {
                        // Δ is affine in u, so exact cancellation has a closed form.
                        sc.uncertainty.effective_input_gain(params, t).map(|b_eff| {
                            let free = sc.uncertainty.input_free_part(t, &body, params);
                            let u = (-f - free + y_d_ddot - gains.k_c * sig.s - gains.lambda * sig.e_dot) / b_eff;
                            (u, Some(sc.uncertainty.delta(t, &body, u, params).total()))
                        })
                    } else {
                        Ok((0.0, Some(sc.uncertainty.delta(t, &body, 0.0, params).total())))
                    }
                }
            };
            let (mut u, dh) = match command {
                Ok(c) => c,
                Err(e) => return SimOutput { series, network, failure: Some(e) },
            };
            if let Some(limit) = sc.saturation {
                u = u.clamp(-limit, limit);
            }
            held = Held { u, delta_hat: dh.unwrap_or(0.0) };
            delta_hat_log = dh;
            u_prev = u;
        }

        if n % sc.integrator.log_every == 0 {
            let weights = network.as_ref().map(|n| n.weights());
            let v_proxy = match kind {
                ControllerKind::None => None,
                ControllerKind::Simple => Some(lyapunov_simple(sig.s, weights.unwrap_or(&[]), gains.gamma)),
                ControllerKind::Composite => {
                    Some(lyapunov_composite(sig.s, sig.s_d, gains.k_d, weights.unwrap_or(&[]), gains.gamma))
                }
                ControllerKind::Smc | ControllerKind::Oracle => Some(lyapunov_simple(sig.s, &[], gains.gamma)),
            };
            series.samples.push(Sample {
                t,
                x: body.x,
                x_dot: body.x_dot,
                y: body.y,
                y_dot: body.y_dot,
                f_l: forces.lift,
                f_d: forces.drag,
                u: held.u,
                delta_true: sc.uncertainty.delta(t, &body, held.u, params).total(),
                delta_hat: delta_hat_log,
                s: sig.s,
                s_d: (kind == ControllerKind::Composite).then_some(sig.s_d),
                w_norm: network.as_ref().map(|n| n.weight_max_abs()),
                v_proxy,
            });
        }

        if n == n_steps {
            break;
        }

        if n % divisor == 0 && t >= gains.t_ctrl_on {
            if let Some(net) = network.as_mut() {
                net.apply_update(&features, drive, gains.gamma, dt * divisor as f64);
            }
        }

        match plant.step(&state, sc.integrator.method, held, t, dt) {
            Ok(next) => state = next,
            Err(e) => return SimOutput { series, network, failure: Some(e) },
        }
    }

    SimOutput { series, network, failure: None }
}

pub fn simulate(sc: &Scenario) -> Result<TimeSeries> {
    let out = simulate_partial(sc);
    match out.failure {
        Some(e) => Err(e),
        None => Ok(out.series),
    }
}
