//! Horizontal void extent from the interruption of the base/subgrade echo.

use serde::{Deserialize, Serialize};

use crate::detect::picks::window_extremum;
use crate::error::{Error, Result};
use crate::trace::Radargram;

/// Deviation from the lateral median that starts an interruption.
pub const ENTER_DEVIATION: f64 = 0.5;
/// Deviation below which an interruption ends.
pub const EXIT_DEVIATION: f64 = 0.25;

/// (true length L, feature length d) pairs simulated for a 0.1 m air void
/// under the standard road model with an 800 MHz antenna.
pub const REFERENCE_EXTENT_PAIRS: [(f64, f64); 12] = [
    (0.08, 0.34),
    (0.12, 0.38),
    (0.16, 0.42),
    (0.20, 0.46),
    (0.24, 0.50),
    (0.28, 0.50),
    (0.32, 0.54),
    (0.36, 0.58),
    (0.40, 0.62),
    (0.44, 0.66),
    (0.48, 0.66),
    (0.52, 0.70),
];

/// Interrupted stretch of the base/subgrade echo.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureLength {
    /// Distance between the two edges in metres.
    pub d: f64,
    /// Last undisturbed trace on the left (or the first trace).
    pub left_index: usize,
    /// First undisturbed trace on the right (or the last trace).
    pub right_index: usize,
    pub left_x: f64,
    pub right_x: f64,
    /// Time at which the horizon amplitudes are read.
    pub horizon_time: f64,
    /// Signed horizon amplitude of every trace.
    pub amplitudes: Vec<f64>,
    pub median: f64,
}

impl FeatureLength {
    /// Centre of the interrupted stretch.
    pub fn center(&self) -> f64 {
        0.5 * (self.left_x + self.right_x)
    }
}

/// Amplitude of every trace at the horizon time: the time inside `window`
/// (seconds) where the sample-wise lateral median trace peaks.
pub fn horizon_amplitudes(r: &Radargram, window: (f64, f64)) -> Result<(f64, Vec<f64>)> {
    let first = &r.traces[0];
    window_extremum(first, window)?;
    let (lo, hi) = (first.index_of(window.0), first.index_of(window.1));
    let mut column = vec![0.0; r.n_traces()];
    let mut best = (lo, 0.0f64);
    for k in lo..=hi {
        for (c, t) in column.iter_mut().zip(&r.traces) {
            *c = t.samples[k];
        }
        let m = median(&column);
        if m.abs() > best.1.abs() {
            best = (k, m);
        }
    }
    let k = best.0;
    Ok((first.time(k), r.traces.iter().map(|t| t.samples[k]).collect()))
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Locates the stretch where the horizon echo, read at the horizon time,
/// departs from its lateral median by more than half, widened while the departure exceeds a quarter.
/// Its edges are the undisturbed traces on either side.
pub fn extract_feature_length(r: &Radargram, layer_window: (f64, f64)) -> Result<FeatureLength> {
    r.validate()?;
    let (horizon_time, amps) = horizon_amplitudes(r, layer_window)?;
    let m = median(&amps);
    if m == 0.0 {
        return Err(Error::NoAnomaly);
    }
    let dev: Vec<f64> = amps.iter().map(|a| (a - m).abs() / m.abs()).collect();
    let (peak, &peak_dev) = dev.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("radargram has traces");
    if !(peak_dev > ENTER_DEVIATION) {
        return Err(Error::NoAnomaly);
    }
    let mut lo = peak;
    while lo > 0 && dev[lo - 1] > EXIT_DEVIATION {
        lo -= 1;
    }
    let mut hi = peak;
    while hi + 1 < dev.len() && dev[hi + 1] > EXIT_DEVIATION {
        hi += 1;
    }
    let left_index = lo.saturating_sub(1);
    let right_index = (hi + 1).min(dev.len() - 1);
    let (left_x, right_x) = (r.position(left_index), r.position(right_index));
    Ok(FeatureLength { d: right_x - left_x, left_index, right_index, left_x, right_x, horizon_time, amplitudes: amps, median: m })
}

/// Linear relation `d = slope · L + intercept` between true void length `L`
/// and feature length `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtentModel {
    pub slope: f64,
    pub intercept: f64,
    /// Correlation coefficient of the fit.
    pub r: f64,
}

impl ExtentModel {
    /// Relation fitted to [`REFERENCE_EXTENT_PAIRS`], with the coefficients
    /// rounded to four decimals.
    pub fn reference() -> Self {
        ExtentModel { slope: 0.8077, intercept: 0.2877, r: 0.99 }
    }

    pub fn feature_length(&self, length: f64) -> f64 {
        self.slope * length + self.intercept
    }
}

/// Ordinary least squares of `d` on `L` over `(L, d)` pairs.
pub fn fit_extent_regression(pairs: &[(f64, f64)]) -> Result<ExtentModel> {
    if pairs.len() < 2 {
        return Err(Error::validation("pairs", "need at least two (L, d) pairs"));
    }
    if pairs.iter().any(|(l, d)| !l.is_finite() || !d.is_finite()) {
        return Err(Error::validation("pairs", "non-finite value"));
    }
    let n = pairs.len() as f64;
    let ml = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let md = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sll, mut sdd, mut sld) = (0.0, 0.0, 0.0);
    for (l, d) in pairs {
        sll += (l - ml) * (l - ml);
        sdd += (d - md) * (d - md);
        sld += (l - ml) * (d - md);
    }
    if sll <= 1e-12 * ml.abs().max(1.0).powi(2) {
        return Err(Error::Singular("all lengths are equal".into()));
    }
    let slope = sld / sll;
    if !(slope > 0.0) {
        return Err(Error::domain(format!("feature length does not grow with void length (slope {slope})")));
    }
    let r = (sld / (sll * sdd).sqrt()).clamp(-1.0, 1.0);
    Ok(ExtentModel { slope, intercept: md - slope * ml, r })
}

/// Void length whose feature length under `model` is `d`.
pub fn estimate_extent(d: f64, model: &ExtentModel) -> Result<f64> {
    if !(model.slope > 0.0) {
        return Err(Error::validation("slope", "must be positive"));
    }
    if !(d > model.intercept) {
        return Err(Error::BelowResolvable { d, intercept: model.intercept });
    }
    Ok((d - model.intercept) / model.slope)
}
