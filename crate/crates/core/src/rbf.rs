//! Radial-basis-function uncertainty estimator.
//!
//! Inputs are X = [y, ẏ, u, f_L], divided component-wise by `input_scales`
//! before the Gaussian kernels are evaluated. The estimate is Δ̂ = Ŵᵀμ(X).
//! Centers and widths are drawn once and never trained; only Ŵ adapts.
//!
//! The ideal weights W and the approximation bound ε_M that appear in the
//! stability argument are not computable and have no representation here.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PlantParams;

pub const INPUT_DIM: usize = 4;

/// How a fresh network is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSettings {
    pub nodes: usize,
    pub seed: u64,
    /// Centers are uniform in [−r, r]⁴ of normalized input space.
    #[serde(default = "default_center_range")]
    pub center_range: f64,
    #[serde(default = "default_width_min")]
    pub width_min: f64,
    #[serde(default = "default_width_max")]
    pub width_max: f64,
    /// Optional hard cap on ‖Ŵ‖₂, off by default.
    #[serde(default)]
    pub weight_cap: Option<f64>,
}

fn default_center_range() -> f64 {
    1.0
}
fn default_width_min() -> f64 {
    0.5
}
fn default_width_max() -> f64 {
    2.0
}

impl Default for NetworkSettings {
    fn default() -> Self {
        NetworkSettings {
            nodes: 15,
            seed: 42,
            center_range: default_center_range(),
            width_min: default_width_min(),
            width_max: default_width_max(),
            weight_cap: None,
        }
    }
}

impl NetworkSettings {
    pub fn validate(&self) -> Result<()> {
        if self.nodes == 0 {
            return Err(Error::validation("nodes", "need at least one hidden node"));
        }
        if !(self.center_range.is_finite() && self.center_range >= 0.0) {
            return Err(Error::validation("center_range", "must be non-negative"));
        }
        if !(self.width_min > 0.0 && self.width_max >= self.width_min && self.width_max.is_finite()) {
            return Err(Error::validation("width_min", "need 0 < width_min <= width_max"));
        }
        if let Some(cap) = self.weight_cap {
            if !(cap > 0.0) {
                return Err(Error::validation("weight_cap", "must be positive"));
            }
        }
        Ok(())
    }
}

/// Normalization divisors for [y, ẏ, u, f_L]: D, U, K·D and ½ρU²D.
pub fn default_input_scales(params: &PlantParams) -> [f64; INPUT_DIM] {
    [
        params.diameter,
        params.velocity,
        params.stiffness * params.diameter,
        params.force_scale(),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct RbfNetwork {
    centers: Vec<[f64; INPUT_DIM]>,
    widths: Vec<f64>,
    weights: Vec<f64>,
    input_scales: [f64; INPUT_DIM],
    weight_cap: Option<f64>,
}

impl RbfNetwork {
    pub fn new(
        centers: Vec<[f64; INPUT_DIM]>,
        widths: Vec<f64>,
        weights: Vec<f64>,
        input_scales: [f64; INPUT_DIM],
    ) -> Result<Self> {
        let n = centers.len();
        if n == 0 {
            return Err(Error::validation("nodes", "need at least one hidden node"));
        }
        if widths.len() != n || weights.len() != n {
            return Err(Error::validation("nodes", "centers, widths and weights differ in length"));
        }
        if widths.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::validation("widths", "must be positive"));
        }
        if input_scales.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::validation("input_scales", "must be positive"));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::validation("W_hat", "must be finite"));
        }
        Ok(RbfNetwork { centers, widths, weights, input_scales, weight_cap: None })
    }

    /// Random centers and widths from `settings.seed`; Ŵ starts at zero.
    pub fn random(settings: &NetworkSettings, input_scales: [f64; INPUT_DIM]) -> Result<Self> {
        settings.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
        let r = settings.center_range;
        let mut centers = Vec::with_capacity(settings.nodes);
        let mut widths = Vec::with_capacity(settings.nodes);
        for _ in 0..settings.nodes {
            let mut c = [0.0; INPUT_DIM];
            for v in c.iter_mut() {
                *v = rng.random_range(-r..=r);
            }
            centers.push(c);
            widths.push(rng.random_range(settings.width_min..=settings.width_max));
        }
        let mut net = Self::new(centers, widths, vec![0.0; settings.nodes], input_scales)?;
        net.weight_cap = settings.weight_cap;
        Ok(net)
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn centers(&self) -> &[[f64; INPUT_DIM]] {
        &self.centers
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn input_scales(&self) -> [f64; INPUT_DIM] {
        self.input_scales
    }

    pub fn set_weights(&mut self, weights: &[f64]) {
        assert_eq!(weights.len(), self.weights.len());
        self.weights.copy_from_slice(weights);
    }

    pub fn features(&self, input: &[f64; INPUT_DIM]) -> Vec<f64> {
        let mut z = [0.0; INPUT_DIM];
        for i in 0..INPUT_DIM {
            z[i] = input[i] / self.input_scales[i];
        }
        self.centers
            .iter()
            .zip(&self.widths)
            .map(|(c, &w)| {
                let d2: f64 = c.iter().zip(&z).map(|(a, b)| (b - a) * (b - a)).sum();
                (-d2 / (2.0 * w * w)).exp()
            })
            .collect()
    }

    /// Ŵᵀμ for precomputed features.
    pub fn output(&self, features: &[f64]) -> f64 {
        self.weights.iter().zip(features).map(|(w, m)| w * m).sum()
    }

    pub fn estimate(&self, input: &[f64; INPUT_DIM]) -> f64 {
        self.output(&self.features(input))
    }

    /// One explicit-Euler step of Ŵ̇ = Γ·μ·drive.
    pub fn apply_update(&mut self, features: &[f64], drive: f64, gamma: f64, dt: f64) {
        let k = dt * gamma * drive;
        for (w, m) in self.weights.iter_mut().zip(features) {
            *w += k * m;
        }
        if let Some(cap) = self.weight_cap {
            let norm = self.weight_norm();
            if norm > cap {
                let shrink = cap / norm;
                self.weights.iter_mut().for_each(|w| *w *= shrink);
            }
        }
    }

    /// Simple learning: Ŵ̇ = Γ·μ·s.
    pub fn update_simple(&mut self, input: &[f64; INPUT_DIM], s: f64, gamma: f64, dt: f64) {
        let mu = self.features(input);
        self.apply_update(&mu, s, gamma, dt);
    }

    /// Composite learning: Ŵ̇ = Γ·μ·(s − k_D·s_D).
    pub fn update_composite(&mut self, input: &[f64; INPUT_DIM], s: f64, s_d: f64, k_d: f64, gamma: f64, dt: f64) {
        let mu = self.features(input);
        self.apply_update(&mu, s - k_d * s_d, gamma, dt);
    }

    pub fn weight_norm(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum::<f64>().sqrt()
    }

    pub fn weight_max_abs(&self) -> f64 {
        self.weights.iter().fold(0.0, |a, w| a.max(w.abs()))
    }

    /// CSV `node,center_y,center_ydot,center_u,center_fL,width,W_hat`.
    pub fn write_snapshot<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["node", "center_y", "center_ydot", "center_u", "center_fL", "width", "W_hat"])?;
        for (i, ((c, width), weight)) in self.centers.iter().zip(&self.widths).zip(&self.weights).enumerate() {
            w.write_record([
                i.to_string(),
                c[0].to_string(),
                c[1].to_string(),
                c[2].to_string(),
                c[3].to_string(),
                width.to_string(),
                weight.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// State of the composite method's observer of the transverse motion.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EstimatorState {
    pub y_hat: f64,
    pub y_hat_dot: f64,
}

/// Observer acceleration ŷ̈ = f + b·u + Δ̂ − k_SE·s_D − λ_D·ė_D.
#[allow(clippy::too_many_arguments)]
pub fn state_estimator_accel(
    f: f64,
    b: f64,
    u: f64,
    delta_hat: f64,
    s_d: f64,
    e_d_dot: f64,
    k_se: f64,
    lambda_d: f64,
) -> f64 {
    f + b * u + delta_hat - k_se * s_d - lambda_d * e_d_dot
}
