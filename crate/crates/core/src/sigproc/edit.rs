//! Trace editing: dead-trace repair, line reversal, clipping repair,
//! time-zero alignment, channel equalisation and drift removal.

use crate::error::{Error, Result};
use crate::trace::{Radargram, Trace};

/// Replaces dead traces by linear interpolation between the nearest live
/// neighbours, or by a copy of the nearest live trace at the ends.
pub fn repair_traces(r: &Radargram, dead: &[usize]) -> Result<Radargram> {
    let n = r.n_traces();
    let mut is_dead = vec![false; n];
    for &d in dead {
        if d >= n {
            return Err(Error::validation("dead", format!("trace index {d} out of range ({n} traces)")));
        }
        is_dead[d] = true;
    }
    if n > 0 && is_dead.iter().all(|&d| d) {
        return Err(Error::validation("dead", "every trace is marked dead"));
    }
    let mut out = r.clone();
    for i in (0..n).filter(|&i| is_dead[i]) {
        let left = (0..i).rev().find(|&k| !is_dead[k]);
        let right = (i + 1..n).find(|&k| !is_dead[k]);
        let samples = match (left, right) {
            (Some(a), Some(b)) => {
                let w = (i - a) as f64 / (b - a) as f64;
                r.traces[a]
                    .samples
                    .iter()
                    .zip(&r.traces[b].samples)
                    .map(|(x, y)| (1.0 - w) * x + w * y)
                    .collect()
            }
            (Some(a), None) => r.traces[a].samples.clone(),
            (None, Some(b)) => r.traces[b].samples.clone(),
            (None, None) => unreachable!("at least one live trace"),
        };
        out.traces[i].samples = samples;
    }
    Ok(out)
}

/// Reverses the trace order, for lines recorded against the survey direction.
pub fn reverse_line(r: &Radargram) -> Radargram {
    let n = r.n_traces();
    let traces = r
        .traces
        .iter()
        .rev()
        .enumerate()
        .map(|(i, t)| Trace { x: r.x0 + i as f64 * r.dx, ..t.clone() })
        .collect::<Vec<_>>();
    debug_assert_eq!(traces.len(), n);
    Radargram { traces, dx: r.dx, x0: r.x0 }
}

/// Natural cubic spline through `(xs, ys)`, evaluated at `x`.
fn natural_spline(xs: &[f64], ys: &[f64], targets: &[f64]) -> Vec<f64> {
    let n = xs.len();
    if n == 1 {
        return vec![ys[0]; targets.len()];
    }
    // Second derivatives from the tridiagonal system (Thomas algorithm).
    let mut m = vec![0.0; n];
    if n > 2 {
        let k = n - 2;
        let mut a = vec![0.0; k];
        let mut b = vec![0.0; k];
        let mut c = vec![0.0; k];
        let mut d = vec![0.0; k];
        for i in 1..n - 1 {
            let h0 = xs[i] - xs[i - 1];
            let h1 = xs[i + 1] - xs[i];
            a[i - 1] = h0;
            b[i - 1] = 2.0 * (h0 + h1);
            c[i - 1] = h1;
            d[i - 1] = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
        }
        for i in 1..k {
            let w = a[i] / b[i - 1];
            b[i] -= w * c[i - 1];
            d[i] -= w * d[i - 1];
        }
        m[k] = d[k - 1] / b[k - 1];
        for i in (0..k - 1).rev() {
            m[i + 1] = (d[i] - c[i] * m[i + 2]) / b[i];
        }
    }
    targets
        .iter()
        .map(|&x| {
            let seg = xs.windows(2).position(|w| x <= w[1]).unwrap_or(n - 2);
            let (x0, x1) = (xs[seg], xs[seg + 1]);
            let h = x1 - x0;
            let a = (x1 - x) / h;
            let b = (x - x0) / h;
            a * ys[seg]
                + b * ys[seg + 1]
                + ((a * a * a - a) * m[seg] + (b * b * b - b) * m[seg + 1]) * h * h / 6.0
        })
        .collect()
}

/// Number of unclipped samples on each side used as spline knots.
const CLIP_KNOTS: usize = 4;

/// Rebuilds samples that hit the recorder's clip level by cubic-spline
/// interpolation through the unclipped samples on either side.
pub fn restore_clipped(t: &Trace, clip_level: f64) -> Result<Trace> {
    if !(clip_level > 0.0) {
        return Err(Error::validation("clip_level", "must be positive"));
    }
    let thr = clip_level * (1.0 - 1e-6);
    let clipped: Vec<bool> = t.samples.iter().map(|v| v.abs() >= thr).collect();
    let n = t.samples.len();
    let mut out = t.samples.clone();
    let mut i = 0;
    while i < n {
        if !clipped[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i < n && clipped[i] {
            i += 1;
        }
        let end = i; // exclusive
        if start == 0 || end == n {
            return Err(Error::validation("clip", format!("clipped run {start}..{end} touches the trace boundary")));
        }
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let mut k = start;
        while k > 0 && start - k < CLIP_KNOTS && !clipped[k - 1] {
            k -= 1;
        }
        for j in k..start {
            xs.push(j as f64);
            ys.push(t.samples[j]);
        }
        let mut k = end;
        while k < n && k - end < CLIP_KNOTS && !clipped[k] {
            xs.push(k as f64);
            ys.push(t.samples[k]);
            k += 1;
        }
        let targets: Vec<f64> = (start..end).map(|j| j as f64).collect();
        let vals = natural_spline(&xs, &ys, &targets);
        out[start..end].copy_from_slice(&vals);
    }
    Ok(t.with_samples(out))
}

/// Shifts `x` by `k` samples (positive = later), filling with zeros.
pub(crate) fn shift(x: &[f64], k: isize) -> Vec<f64> {
    let n = x.len() as isize;
    (0..n)
        .map(|i| {
            let j = i - k;
            if (0..n).contains(&j) {
                x[j as usize]
            } else {
                0.0
            }
        })
        .collect()
}

/// Shifts every trace so that its maximum inside `search_window` lands on the
/// median peak index of all traces.
pub fn time_zero_align(r: &Radargram, search_window: (f64, f64)) -> Result<Radargram> {
    let Some(first) = r.traces.first() else {
        return Ok(r.clone());
    };
    let (ws, we) = search_window;
    let span_end = first.time(first.len() - 1);
    if !(we > ws) || ws < first.t0 - 1e-15 || we > span_end + 1e-15 {
        return Err(Error::validation("search_window", "empty or outside the trace span"));
    }
    let a = ((ws - first.t0) / first.dt).ceil() as usize;
    let b = (((we - first.t0) / first.dt).floor() as usize).min(first.len() - 1);
    if a > b {
        return Err(Error::validation("search_window", "contains no samples"));
    }
    let peaks: Vec<usize> = r
        .traces
        .iter()
        .map(|t| {
            let mut best = a;
            for i in a..=b {
                if t.samples[i] > t.samples[best] {
                    best = i;
                }
            }
            best
        })
        .collect();
    let mut sorted = peaks.clone();
    sorted.sort_unstable();
    let target = sorted[(sorted.len() - 1) / 2] as isize;
    let traces = r
        .traces
        .iter()
        .zip(&peaks)
        .map(|(t, &p)| t.with_samples(shift(&t.samples, target - p as isize)))
        .collect();
    Ok(Radargram { traces, dx: r.dx, x0: r.x0 })
}

/// Scales every trace so that all mean absolute amplitudes equal their average.
pub fn equalize_traces(r: &Radargram) -> Result<Radargram> {
    let means: Vec<f64> = r
        .traces
        .iter()
        .map(|t| t.samples.iter().map(|v| v.abs()).sum::<f64>() / t.len() as f64)
        .collect();
    if let Some(i) = means.iter().position(|&m| !(m > 0.0)) {
        return Err(Error::validation("traces", format!("trace {i} has zero energy")));
    }
    let avg = means.iter().sum::<f64>() / means.len().max(1) as f64;
    let traces = r
        .traces
        .iter()
        .zip(&means)
        .map(|(t, m)| {
            let s = avg / m;
            t.with_samples(t.samples.iter().map(|v| v * s).collect())
        })
        .collect();
    Ok(Radargram { traces, dx: r.dx, x0: r.x0 })
}

/// Removes the DC offset. With several segments, each segment mean is taken
/// as the baseline at the segment centre and the baseline is interpolated
/// linearly in between, which avoids steps at segment boundaries.
pub fn remove_dc(t: &Trace, n_segments: usize) -> Result<Trace> {
    let n = t.len();
    if n_segments == 0 || n_segments > n {
        return Err(Error::validation("n_segments", format!("must be in 1..={n}")));
    }
    if n_segments == 1 {
        let m = t.samples.iter().sum::<f64>() / n as f64;
        return Ok(t.with_samples(t.samples.iter().map(|v| v - m).collect()));
    }
    let bounds: Vec<usize> = (0..=n_segments).map(|k| k * n / n_segments).collect();
    let mut centres = Vec::with_capacity(n_segments);
    let mut means = Vec::with_capacity(n_segments);
    for w in bounds.windows(2) {
        let seg = &t.samples[w[0]..w[1]];
        means.push(seg.iter().sum::<f64>() / seg.len() as f64);
        centres.push(0.5 * (w[0] + w[1] - 1) as f64);
    }
    let out = t
        .samples
        .iter()
        .enumerate()
        .map(|(i, v)| v - interp_clamped(&centres, &means, i as f64))
        .collect();
    Ok(t.with_samples(out))
}

/// Piecewise-linear interpolation, constant beyond the end knots.
pub(crate) fn interp_clamped(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    let last = xs.len() - 1;
    if x >= xs[last] {
        return ys[last];
    }
    let k = xs.windows(2).position(|w| x <= w[1]).unwrap_or(last - 1);
    let w = (x - xs[k]) / (xs[k + 1] - xs[k]);
    ys[k] * (1.0 - w) + ys[k + 1] * w
}

/// Subtracts a direct-wave reference (for example the mean of sky shots)
/// from every trace.
pub fn remove_direct_wave(r: &Radargram, reference: &Trace) -> Result<Radargram> {
    r.map_traces(|t| {
        if t.len() != reference.len() || t.dt != reference.dt {
            return Err(Error::Shape("reference trace differs in length or sample interval".into()));
        }
        t.minus(reference)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::{ricker, RickerSpec};

    fn rg(rows: &[&[f64]]) -> Radargram {
        let traces = rows.iter().map(|r| Trace::new(r.to_vec(), 1.0, 0.0, 0.0).unwrap()).collect();
        Radargram::new(traces, 1.0, 0.0).unwrap()
    }

    #[test]
    fn repair_interpolates_and_copies() {
        let r = rg(&[&[1.0, 2.0], &[9.0, 9.0], &[3.0, 6.0], &[0.0, 0.0]]);
        assert_eq!(repair_traces(&r, &[]).unwrap(), r);
        let out = repair_traces(&r, &[1, 3]).unwrap();
        assert_eq!(out.traces[1].samples, vec![2.0, 4.0]);
        assert_eq!(out.traces[3].samples, vec![3.0, 6.0]);
        assert!(repair_traces(&r, &[0, 1, 2, 3]).is_err());
    }

    #[test]
    fn reverse_examples() {
        let r = rg(&[&[1.0, 0.0], &[2.0, 0.0], &[3.0, 0.0]]);
        let rev = reverse_line(&r);
        let firsts: Vec<f64> = rev.traces.iter().map(|t| t.samples[0]).collect();
        assert_eq!(firsts, vec![3.0, 2.0, 1.0]);
        assert_eq!(reverse_line(&rev), r);
        let one = rg(&[&[1.0, 2.0]]);
        assert_eq!(reverse_line(&one), one);
    }

    #[test]
    fn clipped_ricker_peak_is_restored() {
        let spec = RickerSpec::new(1e9, 1.0).unwrap();
        let dt = 2e-11;
        let x: Vec<f64> = (0..200).map(|i| ricker(i as f64 * dt, &spec)).collect();
        let level = 0.8;
        let clipped: Vec<f64> = x.iter().map(|v| v.clamp(-level, level)).collect();
        let t = Trace::new(clipped, dt, 0.0, 0.0).unwrap();
        let out = restore_clipped(&t, level).unwrap();
        let peak = out.samples.iter().cloned().fold(f64::MIN, f64::max);
        let true_peak = x.iter().cloned().fold(f64::MIN, f64::max);
        assert!((peak - true_peak).abs() / true_peak < 0.05, "{peak} vs {true_peak}");
        for (a, b) in out.samples.iter().zip(&t.samples) {
            if b.abs() < level * (1.0 - 1e-6) {
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn clip_identity_and_boundary_error() {
        let t = Trace::new(vec![0.1, 0.5, -0.2, 0.3], 1.0, 0.0, 0.0).unwrap();
        assert_eq!(restore_clipped(&t, 1.0).unwrap(), t);
        let single = Trace::new(vec![0.0, 0.5, 1.0, 0.4, 0.1], 1.0, 0.0, 0.0).unwrap();
        let out = restore_clipped(&single, 1.0).unwrap();
        assert!(out.samples[2].is_finite());
        let edge = Trace::new(vec![1.0, 0.5, 0.1], 1.0, 0.0, 0.0).unwrap();
        assert!(restore_clipped(&edge, 1.0).is_err());
    }

    #[test]
    fn alignment_brings_peaks_together() {
        let base = [0.0, 0.0, 0.0, 1.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0];
        let r = rg(&[&shift(&base, 0), &shift(&base, 2), &shift(&base, -1), &shift(&base, 1), &shift(&base, 0)]);
        let out = time_zero_align(&r, (0.0, 9.0)).unwrap();
        for t in &out.traces {
            assert_eq!(t.samples[3], 1.0);
        }
        assert_eq!(time_zero_align(&out, (0.0, 9.0)).unwrap(), out);
        assert!(time_zero_align(&r, (4.0, 4.0)).is_err());
    }

    #[test]
    fn equalisation_scales() {
        let r = rg(&[&[1.0, -1.0], &[3.0, -3.0]]);
        let out = equalize_traces(&r).unwrap();
        assert_eq!(out.traces[0].samples, vec![2.0, -2.0]);
        assert!((out.traces[1].samples[0] - 2.0).abs() < 1e-15);
        assert!(equalize_traces(&rg(&[&[1.0, 1.0], &[0.0, 0.0]])).is_err());
    }

    #[test]
    fn dc_removal() {
        let c = Trace::new(vec![2.5; 50], 1.0, 0.0, 0.0).unwrap();
        assert!(remove_dc(&c, 1).unwrap().samples.iter().all(|v| v.abs() < 1e-15));
        assert!(remove_dc(&c, 5).unwrap().samples.iter().all(|v| v.abs() < 1e-15));
        let z = Trace::new(vec![1.0, -1.0, 1.0, -1.0], 1.0, 0.0, 0.0).unwrap();
        assert_eq!(remove_dc(&z, 1).unwrap(), z);
        let n = 1000;
        let sine: Vec<f64> = (0..n).map(|i| (2.0 * std::f64::consts::PI * i as f64 / 50.0).sin()).collect();
        let t = Trace::new(sine.iter().map(|v| v + 0.5).collect(), 1.0, 0.0, 0.0).unwrap();
        let out = remove_dc(&t, 1).unwrap();
        let err: f64 = out.samples.iter().zip(&sine).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = sine.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(err / norm < 0.01);
    }

    #[test]
    fn direct_wave_subtraction() {
        let r = rg(&[&[1.0, 2.0, 3.0], &[1.0, 5.0, 3.0]]);
        let zero = Trace::new(vec![0.0; 3], 1.0, 0.0, 0.0).unwrap();
        assert_eq!(remove_direct_wave(&r, &zero).unwrap(), r);
        let direct = Trace::new(vec![1.0, 2.0, 3.0], 1.0, 0.0, 0.0).unwrap();
        let out = remove_direct_wave(&r, &direct).unwrap();
        assert_eq!(out.traces[1].samples, vec![0.0, 3.0, 0.0]);
        let short = Trace::new(vec![0.0; 2], 1.0, 0.0, 0.0).unwrap();
        assert!(remove_direct_wave(&r, &short).is_err());
    }
}
