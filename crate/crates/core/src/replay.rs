//! Replays an externally computed force history from CSV.
//!
//! Columns are found by name: `t,f_L,f_D` (newtons) or `t,C_L,C_D`
//! (coefficients, converted with ½ρU²D). Other columns are ignored, so a
//! run's own `timeseries.csv` replays directly. Values between rows are linearly interpolated;
//! queries outside the recorded span clamp to the nearest row.

use std::io::Read;
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FluidForces, PlantParams};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    #[default]
    Linear,
}

/// A force source driven by time alone.
pub trait ForceProvider: Send + Sync {
    fn forces(&self, t: f64) -> FluidForces;
}

#[derive(Debug)]
pub struct ReplayProvider {
    times: Vec<f64>,
    lift: Vec<f64>,
    drag: Vec<f64>,
    interpolation: Interpolation,
    warned: AtomicBool,
}

impl ReplayProvider {
    pub fn load(path: impl AsRef<Path>, interpolation: Interpolation, params: &PlantParams) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_reader(file, interpolation, params)
    }

    pub fn from_reader<R: Read>(reader: R, interpolation: Interpolation, params: &PlantParams) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(|e| Error::Parse { line: 1, message: e.to_string() })?.clone();
        let find = |name: &str| headers.iter().position(|h| h == name);
        let (idx, scale) = match (find("t"), find("f_L"), find("f_D"), find("C_L"), find("C_D")) {
            (Some(t), Some(l), Some(d), _, _) => ([t, l, d], 1.0),
            (Some(t), None, None, Some(l), Some(d)) => ([t, l, d], params.force_scale()),
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    message: format!(
                        "need columns t,f_L,f_D or t,C_L,C_D, got `{}`",
                        headers.iter().collect::<Vec<_>>().join(",")
                    ),
                })
            }
        };

        let (mut times, mut lift, mut drag) = (Vec::new(), Vec::new(), Vec::new());
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| Error::Parse { line, message: e.to_string() })?;
            let mut vals = [0.0; 3];
            for (v, &col) in vals.iter_mut().zip(&idx) {
                let field = rec.get(col).unwrap_or("");
                *v = field
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse { line, message: format!("bad number `{field}`") })?;
            }
            if let Some(&last) = times.last() {
                if vals[0] <= last {
                    return Err(Error::NonMonotonicTime { line });
                }
            }
            times.push(vals[0]);
            lift.push(vals[1] * scale);
            drag.push(vals[2] * scale);
        }
        if times.is_empty() {
            return Err(Error::EmptyFile);
        }
        Ok(ReplayProvider { times, lift, drag, interpolation, warned: AtomicBool::new(false) })
    }

    pub fn span(&self) -> (f64, f64) {
        (self.times[0], *self.times.last().unwrap())
    }

    fn warn_once(&self, t: f64) {
        if !self.warned.swap(true, Ordering::Relaxed) {
            let (a, b) = self.span();
            log::warn!("replay query t = {t} outside recorded span [{a}, {b}]; clamping to endpoint");
        }
    }
}

impl ForceProvider for ReplayProvider {
    fn forces(&self, t: f64) -> FluidForces {
        let n = self.times.len();
        let (t0, t1) = self.span();
        if t <= t0 || t >= t1 || n == 1 {
            if t < t0 || t > t1 {
                self.warn_once(t);
            }
            let i = if t <= t0 { 0 } else { n - 1 };
            return FluidForces { lift: self.lift[i], drag: self.drag[i] };
        }
        match self.interpolation {
            Interpolation::Linear => {
                let hi = self.times.partition_point(|&x| x <= t);
                let lo = hi - 1;
                let w = (t - self.times[lo]) / (self.times[hi] - self.times[lo]);
                FluidForces {
                    lift: self.lift[lo] + w * (self.lift[hi] - self.lift[lo]),
                    drag: self.drag[lo] + w * (self.drag[hi] - self.drag[lo]),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str) -> Result<ReplayProvider> {
        ReplayProvider::from_reader(text.as_bytes(), Interpolation::Linear, &PlantParams::reference())
    }

    #[test]
    fn midpoint_interpolation() {
        let p = load("t,f_L,f_D\n0,0,1\n1,2,1\n").unwrap();
        let f = p.forces(0.5);
        assert_eq!((f.lift, f.drag), (1.0, 1.0));
    }

    #[test]
    fn clamps_past_end() {
        let p = load("t,f_L,f_D\n0,0,1\n1,2,1\n").unwrap();
        let f = p.forces(2.0);
        assert_eq!((f.lift, f.drag), (2.0, 1.0));
        let f = p.forces(-1.0);
        assert_eq!((f.lift, f.drag), (0.0, 1.0));
    }

    #[test]
    fn repeated_time_rejected() {
        assert!(matches!(load("t,f_L,f_D\n0,0,1\n0,2,1\n"), Err(Error::NonMonotonicTime { line: 3 })));
    }

    #[test]
    fn empty_rejected() {
        assert!(matches!(load("t,f_L,f_D\n"), Err(Error::EmptyFile)));
    }

    #[test]
    fn bad_number_reports_line() {
        match load("t,f_L,f_D\n0,0,1\n1,abc,1\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn coefficients_are_scaled() {
        let params = PlantParams::reference();
        let p = load("t,C_L,C_D\n0,0.23,1.15\n1,0.23,1.15\n").unwrap();
        let f = p.forces(0.3);
        assert!((f.lift - 0.23 * params.force_scale()).abs() < 1e-12);
        assert!((f.drag - 1.15 * params.force_scale()).abs() < 1e-12);
    }

    #[test]
    fn unknown_header_rejected() {
        assert!(matches!(load("time,lift,drag\n0,0,0\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn output_schema_replays() {
        let text = format!("{}\n0,0,0,0,0,0,1,,,,,,,\n1,0,0,0,0,2,1,,,,,,,\n", crate::sim::CSV_HEADER.join(","));
        let p = load(&text).unwrap();
        let f = p.forces(0.5);
        assert_eq!((f.lift, f.drag), (1.0, 1.0));
    }
}
