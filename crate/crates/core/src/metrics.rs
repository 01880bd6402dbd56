//! Comparison quantities for displacement series: error costs against a
//! reference, peak amplitude, suppression percentage and dominant frequency.

use std::f64::consts::PI;

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_SPECTRUM_SAMPLES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub sse: f64,
    pub mse: f64,
    pub rmse: f64,
    pub mae: f64,
    pub n_samples: usize,
}

pub fn cost_report(series: &[f64], reference: f64) -> Result<CostReport> {
    if series.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (sse, sae) = series.iter().fold((0.0, 0.0), |(sq, ab), &v| {
        let e = v - reference;
        (sq + e * e, ab + e.abs())
    });
    let n = series.len() as f64;
    let mse = sse / n;
    Ok(CostReport { sse, mse, rmse: mse.sqrt(), mae: sae / n, n_samples: series.len() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuppressionReport {
    pub y_max_free: f64,
    pub y_max_controlled: f64,
    pub suppression_pct: f64,
}

pub fn max_abs(series: &[f64]) -> Result<f64> {
    if series.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(series.iter().fold(0.0, |a: f64, v| a.max(v.abs())))
}

pub fn suppression_from_peaks(y_max_free: f64, y_max_controlled: f64) -> Result<SuppressionReport> {
    if !(y_max_free > 0.0) {
        return Err(Error::UndefinedSuppression);
    }
    Ok(SuppressionReport {
        y_max_free,
        y_max_controlled,
        suppression_pct: 100.0 * (1.0 - y_max_controlled / y_max_free),
    })
}

/// Peak |y| of each window and the resulting percentage reduction.
pub fn suppression(y_free: &[f64], y_ctrl: &[f64]) -> Result<SuppressionReport> {
    suppression_from_peaks(max_abs(y_free)?, max_abs(y_ctrl)?)
}

/// Frequency (Hz) of the largest spectral peak.
///
/// The mean is removed and a Hann taper applied; the series is zero-padded
/// to at least four times its length and the peak refined by a parabola
/// through the log-magnitudes of the three bins around it.
pub fn dominant_frequency(series: &[f64], dt_sample: f64) -> Result<f64> {
    if series.len() < MIN_SPECTRUM_SAMPLES {
        return Err(Error::InsufficientData { needed: MIN_SPECTRUM_SAMPLES, got: series.len() });
    }
    if !(dt_sample > 0.0) {
        return Err(Error::validation("dt_sample", "must be positive"));
    }
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    let spread = series.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    if spread == 0.0 || spread <= 1e-12 * mean.abs() || !spread.is_finite() {
        return Err(Error::InsufficientSignal);
    }

    let len = (4 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = series
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let w = 0.5 - 0.5 * (2.0 * PI * i as f64 / (n - 1) as f64).cos();
            Complex::new((v - mean) * w, 0.0)
        })
        .collect();
    buf.resize(len, Complex::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);

    let mags: Vec<f64> = buf[..=len / 2].iter().map(|c| c.norm()).collect();
    let (k, &peak) = mags
        .iter()
        .enumerate()
        .skip(1)
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("spectrum has more than one bin");
    if !(peak > 0.0) {
        return Err(Error::InsufficientSignal);
    }
    let offset = if k + 1 < mags.len() && mags[k - 1] > 0.0 && mags[k + 1] > 0.0 {
        let (a, b, c) = (mags[k - 1].ln(), peak.ln(), mags[k + 1].ln());
        let denom = a - 2.0 * b + c;
        if denom.abs() > 0.0 {
            (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
        } else {
            0.0
        }
    } else {
        0.0
    };
    Ok((k as f64 + offset) / (len as f64 * dt_sample))
}
