//! Amplitude gain: spreading compensation, AGC and user-defined curves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::Trace;

/// Multiplies the sample at time `tau` by `max(tau/t_ref, 1)^exponent`.
pub fn gain_spreading(t: &Trace, t_ref: f64, exponent: f64) -> Result<Trace> {
    let end = t.time(t.len() - 1);
    if !(t_ref > 0.0) || t_ref < t.t0 || t_ref > end {
        return Err(Error::validation("t_ref", "must be positive and inside the trace span"));
    }
    let out = t
        .samples
        .iter()
        .enumerate()
        .map(|(i, v)| v * (t.time(i) / t_ref).max(1.0).powf(exponent))
        .collect();
    Ok(t.with_samples(out))
}

/// AGC output: the scaled trace and the windows that were all zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgcResult {
    pub trace: Trace,
    pub gains: Vec<f64>,
    pub zero_windows: Vec<usize>,
}

/// Window-wise automatic gain: each consecutive window is scaled so that its
/// mean absolute amplitude equals the largest window mean of the input.
pub fn gain_agc(t: &Trace, window: usize) -> Result<AgcResult> {
    if window < 2 {
        return Err(Error::validation("window", "must be at least 2 samples"));
    }
    let means: Vec<f64> = t
        .samples
        .chunks(window)
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>() / c.len() as f64)
        .collect();
    let target = means.iter().cloned().fold(0.0, f64::max);
    let mut zero_windows = Vec::new();
    let gains: Vec<f64> = means
        .iter()
        .enumerate()
        .map(|(k, &m)| {
            if m > 0.0 {
                target / m
            } else {
                zero_windows.push(k);
                0.0
            }
        })
        .collect();
    let out = t.samples.iter().enumerate().map(|(i, v)| v * gains[i / window]).collect();
    Ok(AgcResult { trace: t.with_samples(out), gains, zero_windows })
}

/// Gain curve knot: `(time s, gain)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainKnot {
    pub time: f64,
    pub gain: f64,
}

/// Multiplies the trace by a user gain curve, linearly interpolated between knots.
pub fn gain_custom(t: &Trace, curve: &[GainKnot]) -> Result<Trace> {
    if curve.is_empty() {
        return Err(Error::validation("curve", "empty"));
    }
    if let Some(k) = curve.iter().find(|k| !(k.gain > 0.0)) {
        return Err(Error::validation("curve", format!("non-positive gain {} at {} s", k.gain, k.time)));
    }
    if curve.windows(2).any(|w| !(w[1].time > w[0].time)) {
        return Err(Error::validation("curve", "knot times must be strictly increasing"));
    }
    let end = t.time(t.len() - 1);
    let tol = 1e-9 * t.dt;
    if curve[0].time > t.t0 + tol || curve[curve.len() - 1].time < end - tol {
        return Err(Error::validation("curve", "does not cover the trace span"));
    }
    let xs: Vec<f64> = curve.iter().map(|k| k.time).collect();
    let ys: Vec<f64> = curve.iter().map(|k| k.gain).collect();
    let out = t
        .samples
        .iter()
        .enumerate()
        .map(|(i, v)| v * super::edit::interp_clamped(&xs, &ys, t.time(i)))
        .collect();
    Ok(t.with_samples(out))
}
