//! Local controllability of the transverse channel via Lie brackets.
//!
//! With state ξ = [y, ẏ] the channel is ξ̇ = f(ξ) + g(ξ)·u where
//! f = [ẏ, (f_L − K·y)/m + Δ₁] and g = [0, b + Δ₂]. The rank test uses
//! the two columns g and the bracket of f and g.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{PlantParams, State2DOF};
use crate::uncertainty::UncertaintySpec;
use crate::wake::{fluid_forces, WakeParams, WakeState};

pub type Vec2 = [f64; 2];

/// Jacobian by central differences, `jac[i][j] = ∂F_i/∂x_j`.
fn jacobian<F: Fn(Vec2) -> Vec2>(field: &F, x0: Vec2, steps: Vec2) -> Result<[[f64; 2]; 2]> {
    let mut jac = [[0.0; 2]; 2];
    for j in 0..2 {
        let mut xp = x0;
        let mut xm = x0;
        xp[j] += steps[j];
        xm[j] -= steps[j];
        let fp = field(xp);
        let fm = field(xm);
        if !fp.iter().chain(&fm).all(|v| v.is_finite()) {
            let bad = if fp.iter().all(|v| v.is_finite()) { xm } else { xp };
            return Err(Error::Evaluation { point: bad });
        }
        for i in 0..2 {
            jac[i][j] = (fp[i] - fm[i]) / (2.0 * steps[j]);
        }
    }
    Ok(jac)
}

fn mat_vec(a: &[[f64; 2]; 2], v: Vec2) -> Vec2 {
    [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]]
}

/// [f, g] = ∂g/∂x·f − ∂f/∂x·g with per-coordinate finite-difference steps.
pub fn lie_bracket_scaled<F, G>(f: F, g: G, x0: Vec2, steps: Vec2) -> Result<Vec2>
where
    F: Fn(Vec2) -> Vec2,
    G: Fn(Vec2) -> Vec2,
{
    if !steps.iter().all(|&h| h > 0.0 && h.is_finite()) {
        return Err(Error::validation("h", "finite-difference step must be positive"));
    }
    let f0 = f(x0);
    let g0 = g(x0);
    if !f0.iter().chain(&g0).all(|v| v.is_finite()) {
        return Err(Error::Evaluation { point: x0 });
    }
    let dg = jacobian(&g, x0, steps)?;
    let df = jacobian(&f, x0, steps)?;
    let a = mat_vec(&dg, f0);
    let b = mat_vec(&df, g0);
    Ok([a[0] - b[0], a[1] - b[1]])
}

pub fn lie_bracket<F, G>(f: F, g: G, x0: Vec2, h: f64) -> Result<Vec2>
where
    F: Fn(Vec2) -> Vec2,
    G: Fn(Vec2) -> Vec2,
{
    lie_bracket_scaled(f, g, x0, [h, h])
}

/// Drift and input fields of the transverse channel at time `t`.
pub struct AffineFields<'a> {
    params: &'a PlantParams,
    uncertainty: &'a UncertaintySpec,
    wake: Option<(WakeParams, WakeState)>,
    t: f64,
    input_gain: f64,
}

impl<'a> AffineFields<'a> {
    /// `wake` freezes the surrogate's wake state; the lift then depends on
    /// the state only through the drag damping of ẏ.
    pub fn new(
        params: &'a PlantParams,
        uncertainty: &'a UncertaintySpec,
        wake: Option<(WakeParams, WakeState)>,
        t: f64,
    ) -> Result<Self> {
        let input_gain = uncertainty.effective_input_gain(params, t)?;
        Ok(AffineFields { params, uncertainty, wake, t, input_gain })
    }

    pub fn lift(&self, x: Vec2) -> f64 {
        let body = State2DOF { y: x[0], y_dot: x[1], ..Default::default() };
        match &self.wake {
            Some((wp, ws)) => fluid_forces(wp, self.params, ws, &body).lift,
            None => 0.0,
        }
    }

    pub fn drift(&self, x: Vec2) -> Vec2 {
        let body = State2DOF { y: x[0], y_dot: x[1], ..Default::default() };
        let stiffness_error = self.uncertainty.delta(self.t, &body, 0.0, self.params).stiffness;
        let p = self.params;
        [x[1], (self.lift(x) - p.stiffness * x[0]) / p.mass + stiffness_error]
    }

    pub fn input(&self, _x: Vec2) -> Vec2 {
        [0.0, self.input_gain]
    }

    pub fn input_gain(&self) -> f64 {
        self.input_gain
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ControllabilityReport {
    /// Columns are g and the bracket term, row-major storage.
    pub matrix: [[f64; 2]; 2],
    pub det_numeric: f64,
    pub det_closed_form: f64,
    pub singular_values: [f64; 2],
    pub rank: usize,
    pub controllable: bool,
}

fn singular_values(m: &[[f64; 2]; 2]) -> [f64; 2] {
    let fro2 = m.iter().flatten().map(|v| v * v).sum::<f64>();
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = (fro2 * fro2 - 4.0 * det * det).max(0.0).sqrt();
    let s1 = (0.5 * (fro2 + disc)).sqrt();
    let s2 = if s1 > 0.0 { det.abs() / s1 } else { 0.0 };
    [s1, s2]
}

/// Builds M = [g, ad_f g] at `x0` and compares det(M) with −(b + Δ₂)².
///
/// The second column uses ad_f g = ∂f/∂x·g − ∂g/∂x·f, i.e. the negative of
/// [`lie_bracket`]. Rank is unaffected by the sign; with this orientation
/// the determinant is −(b + Δ₂)².
#[allow(clippy::too_many_arguments)]
pub fn controllability_report(
    params: &PlantParams,
    uncertainty: &UncertaintySpec,
    wake: Option<(WakeParams, WakeState)>,
    x0: Vec2,
    t: f64,
    h: f64,
    rank_tol: Option<f64>,
) -> Result<ControllabilityReport> {
    let fields = AffineFields::new(params, uncertainty, wake, t)?;
    let steps = [h * params.diameter, h * params.velocity];
    let bracket = lie_bracket_scaled(|x| fields.drift(x), |x| fields.input(x), x0, steps)?;
    let g = fields.input(x0);
    let ad = [-bracket[0], -bracket[1]];
    let matrix = [[g[0], ad[0]], [g[1], ad[1]]];
    let det_numeric = matrix[0][0] * matrix[1][1] - matrix[0][1] * matrix[1][0];
    let b_eff = fields.input_gain();
    let sv = singular_values(&matrix);
    let tol = rank_tol.unwrap_or(1e-9 * sv[0]);
    let rank = sv.iter().filter(|&&s| s > tol).count();
    Ok(ControllabilityReport {
        matrix,
        det_numeric,
        det_closed_form: -(b_eff * b_eff),
        singular_values: sv,
        rank,
        controllable: rank == 2,
    })
}

impl ControllabilityReport {
    pub fn to_text(&self) -> String {
        let m = &self.matrix;
        format!(
            "M = | {:>12.6e} {:>12.6e} |\n    | {:>12.6e} {:>12.6e} |\n\
             det (numeric)      {:>14.8e}\n\
             det (closed form)  {:>14.8e}\n\
             singular values    {:>12.6e} {:>12.6e}\n\
             rank               {}\n\
             controllable       {}\n",
            m[0][0],
            m[0][1],
            m[1][0],
            m[1][1],
            self.det_numeric,
            self.det_closed_form,
            self.singular_values[0],
            self.singular_values[1],
            self.rank,
            self.controllable
        )
    }
}
