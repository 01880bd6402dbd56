//! Physical parameters of the elastically mounted cylinder and the shared
//! state records passed between the simulation modules.
//!
//! Everything is SI. The structure carries no damping term.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mass ratio m* = 4m/(ρπD²) of the reference configuration.
pub const REFERENCE_MASS_RATIO: f64 = 2.56;

/// Cylinder and flow parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantParams {
    /// Cylinder mass m, kg.
    pub mass: f64,
    /// Spring stiffness K, N/m (same in both directions).
    pub stiffness: f64,
    /// Diameter D, m.
    pub diameter: f64,
    /// Free-stream speed U, m/s.
    pub velocity: f64,
    /// Kinematic viscosity ν, m²/s.
    pub viscosity: f64,
    /// Fluid density ρ, kg/m³.
    pub density: f64,
    /// Input gain b = 1/m, 1/kg.
    pub input_gain: f64,
}

impl PlantParams {
    pub fn new(
        mass: f64,
        stiffness: f64,
        diameter: f64,
        velocity: f64,
        viscosity: f64,
        density: f64,
    ) -> Result<Self> {
        let p = PlantParams {
            mass,
            stiffness,
            diameter,
            velocity,
            viscosity,
            density,
            input_gain: 1.0 / mass,
        };
        p.validate()?;
        Ok(p)
    }

    /// Reference values: m = 1.571 kg, K = 2.48 N/m, D = 1 m,
    /// U = 1 m/s, ν = 0.00667 m²/s, and ρ implied by m* = 2.56.
    pub fn reference() -> Self {
        let (m, d) = (1.571, 1.0);
        let rho = default_rho(m, REFERENCE_MASS_RATIO, d).expect("reference values are positive");
        PlantParams::new(m, 2.48, d, 1.0, 0.00667, rho).expect("reference values are valid")
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("m", self.mass),
            ("K", self.stiffness),
            ("D", self.diameter),
            ("U", self.velocity),
            ("nu", self.viscosity),
            ("rho", self.density),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(name, format!("must be positive and finite, got {v}")));
            }
        }
        if (self.input_gain * self.mass - 1.0).abs() > 4.0 * f64::EPSILON {
            return Err(Error::validation("b", "input gain must equal 1/m"));
        }
        Ok(())
    }

    /// Dynamic pressure times projected length, ½ρU²D (N per unit force coefficient).
    pub fn force_scale(&self) -> f64 {
        0.5 * self.density * self.velocity * self.velocity * self.diameter
    }

    /// Same parameters with the stiffness chosen for a given reduced velocity.
    pub fn with_reduced_velocity(&self, ur: f64) -> Result<Self> {
        if !(ur.is_finite() && ur > 0.0) {
            return Err(Error::validation("Ur", format!("must be positive, got {ur}")));
        }
        let omega = 2.0 * PI * self.velocity / (ur * self.diameter);
        let mut p = *self;
        p.stiffness = self.mass * omega * omega;
        p.validate()?;
        Ok(p)
    }
}

/// Cylinder displacement and velocity in both directions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct State2DOF {
    pub x: f64,
    pub x_dot: f64,
    pub y: f64,
    pub y_dot: f64,
}

impl State2DOF {
    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.x_dot.is_finite() && self.y.is_finite() && self.y_dot.is_finite()
    }
}

/// Lift (transverse) and drag (streamwise) force on the cylinder.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FluidForces {
    pub lift: f64,
    pub drag: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedQuantities {
    /// Natural frequency, Hz.
    pub f_n: f64,
    /// Natural angular frequency, rad/s.
    pub omega_n: f64,
    pub reynolds: f64,
    pub reduced_velocity: f64,
    pub mass_ratio: f64,
}

pub fn derive_quantities(params: &PlantParams) -> Result<DerivedQuantities> {
    params.validate()?;
    let omega_n = (params.stiffness / params.mass).sqrt();
    let f_n = omega_n / (2.0 * PI);
    Ok(DerivedQuantities {
        f_n,
        omega_n,
        reynolds: params.velocity * params.diameter / params.viscosity,
        reduced_velocity: params.velocity / (f_n * params.diameter),
        mass_ratio: 4.0 * params.mass / (params.density * PI * params.diameter * params.diameter),
    })
}

/// Fluid density implied by a mass ratio: ρ = 4m/(m*·π·D²).
pub fn default_rho(mass: f64, mass_ratio: f64, diameter: f64) -> Result<f64> {
    for (name, v) in [("m", mass), ("m_star", mass_ratio), ("D", diameter)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::validation(name, format!("must be positive, got {v}")));
        }
    }
    Ok(4.0 * mass / (mass_ratio * PI * diameter * diameter))
}
