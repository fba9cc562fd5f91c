//! Reflection picking on a single trace.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::Trace;

/// A reflection pulse located on a trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReflectionPick {
    /// Time of the extremum in seconds.
    pub time: f64,
    pub index: usize,
    /// Signed amplitude of the extremum.
    pub amplitude: f64,
    /// +1 for a maximum, -1 for a minimum.
    pub polarity: i8,
}

/// Local extrema standing at least `min_prominence` times the largest
/// absolute amplitude of the trace both away from zero and above the
/// surrounding terrain (topographic prominence), sorted by time.
pub fn pick_reflections(t: &Trace, min_prominence: f64) -> Result<Vec<ReflectionPick>> {
    if !(min_prominence > 0.0 && min_prominence <= 1.0) {
        return Err(Error::validation("min_prominence", "must lie in (0, 1]"));
    }
    let peak = t.max_abs();
    if peak == 0.0 {
        return Ok(Vec::new());
    }
    let threshold = min_prominence * peak;
    let x = &t.samples;
    let mut picks = Vec::new();
    for sign in [1.0, -1.0] {
        let y: Vec<f64> = x.iter().map(|v| sign * v).collect();
        for i in local_maxima(&y) {
            if y[i] >= threshold && prominence(&y, i) >= threshold {
                picks.push(ReflectionPick {
                    time: t.time(i),
                    index: i,
                    amplitude: x[i],
                    polarity: if sign > 0.0 { 1 } else { -1 },
                });
            }
        }
    }
    picks.sort_by_key(|p| p.index);
    Ok(picks)
}

/// Indices of local maxima; a flat top is reported once, at its centre.
fn local_maxima(y: &[f64]) -> Vec<usize> {
    let n = y.len();
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if y[i] > y[i - 1] {
            let mut j = i;
            while j + 1 < n && y[j + 1] == y[i] {
                j += 1;
            }
            if j + 1 < n && y[j + 1] < y[i] {
                out.push((i + j) / 2);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

/// Height of the peak above the higher of the two lowest points separating
/// it from taller peaks (or from the ends of the trace).
fn prominence(y: &[f64], i: usize) -> f64 {
    let v = y[i];
    let mut left_min = v;
    for k in (0..i).rev() {
        if y[k] > v {
            break;
        }
        left_min = left_min.min(y[k]);
    }
    let mut right_min = v;
    for &yk in &y[i + 1..] {
        if yk > v {
            break;
        }
        right_min = right_min.min(yk);
    }
    v - left_min.max(right_min)
}

/// Signed value of largest magnitude inside `[lo, hi]` seconds, with its time.
pub fn window_extremum(t: &Trace, window: (f64, f64)) -> Result<(f64, f64)> {
    let (lo, hi) = window;
    if !(hi > lo) {
        return Err(Error::validation("window", "end must follow start"));
    }
    let end = t.t0 + (t.len() - 1) as f64 * t.dt;
    if hi < t.t0 || lo > end {
        return Err(Error::validation("window", "outside the trace span"));
    }
    let (a, b) = (t.index_of(lo), t.index_of(hi));
    let mut best = (t.time(a), t.samples[a]);
    for i in a..=b {
        if t.samples[i].abs() > best.1.abs() {
            best = (t.time(i), t.samples[i]);
        }
    }
    Ok(best)
}
