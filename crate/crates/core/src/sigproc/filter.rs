//! Frequency and spatial filters.
//!
//! The band-pass is a Hamming-windowed sinc applied as a centred (zero-phase)
//! FIR through FFT convolution, since radar traces are sampled far above the
//! band of interest and the kernels get long.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::{Radargram, Trace};

/// Default pass band for an antenna of centre frequency `fc`: fc ± 0.75 fc.
pub fn default_band(fc: f64) -> (f64, f64) {
    (0.25 * fc, 1.75 * fc)
}

/// Kernel half-length `m` (total taps `2m + 1`) and cut-off frequencies for a
/// pass band `[f_lo, f_hi]` with at least 40 dB rejection at `1.2 * f_hi`
/// and at `f_lo / 1.2`.
fn design(f_lo: f64, f_hi: f64, dt: f64) -> (usize, f64, f64) {
    let hi_width = 0.2 * f_hi;
    let lo_width = if f_lo > 0.0 { f_lo - f_lo / 1.2 } else { f64::INFINITY };
    let width = hi_width.min(lo_width);
    // Hamming: transition width ~ 3.3 / (N dt), stopband ~ 53 dB.
    let taps = (3.3 / (width * dt)).ceil() as usize;
    let m = taps.div_ceil(2).max(1);
    let fc_hi = f_hi + 0.5 * hi_width;
    let fc_lo = if f_lo > 0.0 { f_lo - 0.5 * lo_width } else { 0.0 };
    (m, fc_lo, fc_hi)
}

fn sinc_lowpass(fc: f64, dt: f64, k: f64) -> f64 {
    let w = 2.0 * fc * dt;
    if k == 0.0 {
        w
    } else {
        (std::f64::consts::PI * w * k).sin() / (std::f64::consts::PI * k)
    }
}

/// Windowed-sinc band-pass kernel of length `2m + 1`.
pub fn bandpass_kernel(f_lo: f64, f_hi: f64, dt: f64) -> Vec<f64> {
    let (m, fc_lo, fc_hi) = design(f_lo, f_hi, dt);
    let n = 2 * m + 1;
    (0..n)
        .map(|i| {
            let k = i as f64 - m as f64;
            let hamming = 0.54 + 0.46 * (std::f64::consts::PI * k / m as f64).cos();
            let h = sinc_lowpass(fc_hi, dt, k) - if fc_lo > 0.0 { sinc_lowpass(fc_lo, dt, k) } else { 0.0 };
            h * hamming
        })
        .collect()
}

/// Convolves `x` with a centred odd-length kernel, zero outside the trace.
pub fn convolve_centred(x: &[f64], kernel: &[f64]) -> Vec<f64> {
    let n = x.len();
    let m = kernel.len() / 2;
    let len = (n + kernel.len() - 1).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);
    let mut a: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    a.resize(len, Complex::new(0.0, 0.0));
    let mut b: Vec<Complex<f64>> = kernel.iter().map(|&v| Complex::new(v, 0.0)).collect();
    b.resize(len, Complex::new(0.0, 0.0));
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (u, v) in a.iter_mut().zip(&b) {
        *u *= v;
    }
    inv.process(&mut a);
    let scale = 1.0 / len as f64;
    (0..n).map(|i| a[i + m].re * scale).collect()
}

fn check_band(t: &Trace, f_lo: f64, f_hi: f64) -> Result<()> {
    let nyq = 0.5 / t.dt;
    if !(f_lo >= 0.0) || !(f_hi > f_lo) || !(f_hi < nyq) {
        return Err(Error::validation(
            "band",
            format!("need 0 <= f_lo < f_hi < Nyquist ({nyq:.4e} Hz), got [{f_lo:.4e}, {f_hi:.4e}]"),
        ));
    }
    // The upper rejection edge must also fit below Nyquist.
    if 1.2 * f_hi >= nyq {
        return Err(Error::validation("band", "upper band edge too close to Nyquist"));
    }
    Ok(())
}

/// Zero-phase band-pass filter.
pub fn bandpass(t: &Trace, f_lo: f64, f_hi: f64) -> Result<Trace> {
    check_band(t, f_lo, f_hi)?;
    let k = bandpass_kernel(f_lo, f_hi, t.dt);
    Ok(t.with_samples(convolve_centred(&t.samples, &k)))
}

/// Knot of a time-varying pass band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandKnot {
    pub time: f64,
    pub f_lo: f64,
    pub f_hi: f64,
}

/// Number of cross-faded windows the trace is split into.
const TV_SEGMENTS: usize = 16;

/// Band-pass whose band edges vary along the trace. Band edges are linearly
/// interpolated between knots; the trace is covered by half-overlapping
/// raised-cosine windows, each filtered with its local band, and the results
/// are blended with weights that sum to one everywhere.
pub fn time_varying_bandpass(t: &Trace, schedule: &[BandKnot]) -> Result<Trace> {
    if schedule.len() < 2 {
        return Err(Error::validation("schedule", "needs at least two knots"));
    }
    if schedule.windows(2).any(|w| !(w[1].time > w[0].time)) {
        return Err(Error::validation("schedule", "knot times must be strictly increasing"));
    }
    for k in schedule {
        check_band(t, k.f_lo, k.f_hi)?;
    }
    let n = t.len();
    let hop = (n / TV_SEGMENTS).max(1);
    let centres: Vec<usize> = (0..).map(|k| k * hop).take_while(|&c| c < n + hop).collect();
    let times: Vec<f64> = schedule.iter().map(|k| k.time).collect();
    let lo: Vec<f64> = schedule.iter().map(|k| k.f_lo).collect();
    let hi: Vec<f64> = schedule.iter().map(|k| k.f_hi).collect();
    let mut acc = vec![0.0; n];
    let mut wsum = vec![0.0; n];
    let mut cache: Vec<((u64, u64), Vec<f64>)> = Vec::new();
    for &c in &centres {
        let tc = t.time(c.min(n - 1));
        let f_lo = super::edit::interp_clamped(&times, &lo, tc);
        let f_hi = super::edit::interp_clamped(&times, &hi, tc);
        let key = (f_lo.to_bits(), f_hi.to_bits());
        let filtered = match cache.iter().find(|(k, _)| *k == key) {
            Some((_, v)) => v.clone(),
            None => {
                let v = convolve_centred(&t.samples, &bandpass_kernel(f_lo, f_hi, t.dt));
                cache.push((key, v.clone()));
                v
            }
        };
        let a = c.saturating_sub(hop);
        let b = (c + hop).min(n);
        for i in a..b {
            let u = (i as f64 - c as f64) / hop as f64;
            let w = 0.5 * (1.0 + (std::f64::consts::PI * u).cos());
            acc[i] += w * filtered[i];
            wsum[i] += w;
        }
    }
    let out = acc.iter().zip(&wsum).map(|(a, w)| if *w > 0.0 { a / w } else { 0.0 }).collect();
    Ok(t.with_samples(out))
}

/// Sliding-window statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SmoothKind {
    Mean,
    Median,
}

fn stat(kind: SmoothKind, buf: &mut [f64]) -> f64 {
    match kind {
        SmoothKind::Mean => buf.iter().sum::<f64>() / buf.len() as f64,
        SmoothKind::Median => {
            buf.sort_by(|a, b| a.total_cmp(b));
            let n = buf.len();
            if n % 2 == 1 {
                buf[n / 2]
            } else {
                0.5 * (buf[n / 2 - 1] + buf[n / 2])
            }
        }
    }
}

fn check_odd(name: &str, w: usize) -> Result<()> {
    if w == 0 || w % 2 == 0 {
        return Err(Error::validation(name, format!("window {w} must be odd and >= 1")));
    }
    Ok(())
}

/// Sliding mean or median along a trace; windows shrink at the ends.
pub fn smooth(t: &Trace, window: usize, kind: SmoothKind) -> Result<Trace> {
    check_odd("window", window)?;
    if window > t.len() {
        return Err(Error::validation("window", "longer than the trace"));
    }
    let h = window / 2;
    let n = t.len();
    let mut buf = Vec::with_capacity(window);
    let out = (0..n)
        .map(|i| {
            buf.clear();
            buf.extend_from_slice(&t.samples[i.saturating_sub(h)..(i + h + 1).min(n)]);
            stat(kind, &mut buf)
        })
        .collect();
    Ok(t.with_samples(out))
}

/// Sliding mean across traces at each time sample.
pub fn spatial_moving_average(r: &Radargram, width: usize) -> Result<Radargram> {
    tx_filter(r, 1, width, SmoothKind::Mean)
}

/// Subtracts the mean trace from every trace.
pub fn background_removal(r: &Radargram) -> Result<Radargram> {
    if r.n_traces() < 2 {
        return Err(Error::validation("radargram", "background removal needs at least two traces"));
    }
    let mean = r.mean_trace().expect("non-empty");
    r.map_traces(|t| t.minus(&mean))
}

/// Two-dimensional sliding mean or median over time samples and traces.
pub fn tx_filter(r: &Radargram, t_window: usize, x_window: usize, kind: SmoothKind) -> Result<Radargram> {
    check_odd("t_window", t_window)?;
    check_odd("x_window", x_window)?;
    let nt = r.n_traces();
    let ns = r.n_samples();
    let (ht, hx) = (t_window / 2, x_window / 2);
    let mut buf = Vec::with_capacity(t_window * x_window);
    let mut traces = r.traces.clone();
    for (j, out) in traces.iter_mut().enumerate() {
        let (j0, j1) = (j.saturating_sub(hx), (j + hx + 1).min(nt));
        for i in 0..ns {
            let (i0, i1) = (i.saturating_sub(ht), (i + ht + 1).min(ns));
            buf.clear();
            for tr in &r.traces[j0..j1] {
                buf.extend_from_slice(&tr.samples[i0..i1]);
            }
            out.samples[i] = stat(kind, &mut buf);
        }
    }
    Ok(Radargram { traces, dx: r.dx, x0: r.x0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(f: f64, dt: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| (2.0 * std::f64::consts::PI * f * i as f64 * dt).sin()).collect()
    }

    fn rms(x: &[f64]) -> f64 {
        (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
    }

    #[test]
    fn default_band_for_one_gigahertz() {
        let (lo, hi) = default_band(1e9);
        assert!((lo - 250e6).abs() < 1e-3 && (hi - 1750e6).abs() < 1e-3);
    }

    #[test]
    fn out_of_band_tone_is_rejected() {
        let dt = 2e-11;
        let n = 8000;
        let t = Trace::new(tone(3e9, dt, n), dt, 0.0, 0.0).unwrap();
        let out = bandpass(&t, 250e6, 1750e6).unwrap();
        let mid = &out.samples[2000..6000];
        let db = 20.0 * (rms(mid) / rms(&t.samples[2000..6000])).log10();
        assert!(db <= -40.0, "{db} dB");
    }

    #[test]
    fn in_band_tone_keeps_amplitude_and_phase() {
        let dt = 2e-11;
        let n = 8000;
        let x = tone(1e9, dt, n);
        let t = Trace::new(x.clone(), dt, 0.0, 0.0).unwrap();
        let out = bandpass(&t, 250e6, 1750e6).unwrap();
        let db = 20.0 * (rms(&out.samples[2000..6000]) / rms(&x[2000..6000])).log10();
        assert!(db.abs() < 1.0, "{db} dB");
        let err: f64 = out.samples[2000..6000].iter().zip(&x[2000..6000]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 0.02, "{err}");
    }

    #[test]
    fn band_must_fit_below_nyquist() {
        let t = Trace::new(vec![0.0; 16], 1e-10, 0.0, 0.0).unwrap();
        assert!(bandpass(&t, 1e9, 6e9).is_err());
        assert!(bandpass(&t, 2e9, 1e9).is_err());
    }

    #[test]
    fn median_removes_spike() {
        let t = Trace::new(vec![0.0, 0.0, 5.0, 0.0, 0.0], 1.0, 0.0, 0.0).unwrap();
        assert!(smooth(&t, 3, SmoothKind::Median).unwrap().samples.iter().all(|&v| v == 0.0));
        assert_eq!(smooth(&t, 1, SmoothKind::Mean).unwrap(), t);
        assert!(smooth(&t, 2, SmoothKind::Mean).is_err());
        let c = Trace::new(vec![1.5; 7], 1.0, 0.0, 0.0).unwrap();
        assert_eq!(smooth(&c, 5, SmoothKind::Mean).unwrap(), c);
    }

    #[test]
    fn alternating_traces_average_down() {
        let traces = (0..6)
            .map(|j| Trace::new(vec![if j % 2 == 0 { 1.0 } else { -1.0 }; 3], 1.0, 0.0, 0.0).unwrap())
            .collect();
        let r = Radargram::new(traces, 1.0, 0.0).unwrap();
        let out = spatial_moving_average(&r, 3).unwrap();
        for t in &out.traces[1..5] {
            assert!((t.samples[0].abs() - 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(spatial_moving_average(&r, 1).unwrap(), r);
        assert!(spatial_moving_average(&r, 2).is_err());
    }

    #[test]
    fn tx_median_removes_isolated_spike() {
        let traces = (0..5)
            .map(|j| {
                let mut s = vec![0.0; 5];
                if j == 2 {
                    s[2] = 9.0;
                }
                Trace::new(s, 1.0, 0.0, 0.0).unwrap()
            })
            .collect();
        let r = Radargram::new(traces, 1.0, 0.0).unwrap();
        let out = tx_filter(&r, 3, 3, SmoothKind::Median).unwrap();
        assert!(out.traces.iter().all(|t| t.samples.iter().all(|&v| v == 0.0)));
        assert_eq!(tx_filter(&r, 1, 1, SmoothKind::Median).unwrap(), r);
    }

    #[test]
    fn background_band_removed_anomaly_kept() {
        let n = 5;
        let traces = (0..n)
            .map(|j| {
                let mut s = vec![0.0, 1.0, 0.0, 0.0];
                if j == 3 {
                    s[3] = 2.0;
                }
                Trace::new(s, 1.0, 0.0, 0.0).unwrap()
            })
            .collect();
        let r = Radargram::new(traces, 1.0, 0.0).unwrap();
        let out = background_removal(&r).unwrap();
        assert!(out.traces.iter().all(|t| t.samples[1].abs() < 1e-15));
        let expected = 2.0 * (n as f64 - 1.0) / n as f64;
        assert!((out.traces[3].samples[3] - expected).abs() < 1e-12);
    }
}
