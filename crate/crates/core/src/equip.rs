//! Equipment quality metrics from metal-plate calibration recordings.
//!
//! All metrics are ratios of amplitudes or times, so they do not depend on
//! the gain of the recording.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::{Radargram, Trace};

/// Largest acceptable noise-to-signal ratio.
pub const NOISE_TO_SIGNAL_LIMIT: f64 = 0.05;
/// Largest acceptable short-term amplitude jitter.
pub const AMPLITUDE_JITTER_LIMIT: f64 = 0.01;
/// Largest acceptable spread of acquisition times.
pub const TIME_JITTER_LIMIT: f64 = 0.01;
/// Largest acceptable long-term amplitude variation.
pub const LONG_TERM_AMPLITUDE_LIMIT: f64 = 0.03;
/// Warm-up time after which long-term amplitudes are compared, in seconds.
pub const WARM_UP: f64 = 20.0 * 60.0;

/// Plate shots recorded with the antenna held still over a large metal plate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSet {
    pub traces: Radargram,
    /// Window (s) holding the plate echo.
    pub plate_peak_window: (f64, f64),
    /// Acquisition time of every trace in seconds, when known.
    #[serde(default)]
    pub timestamps: Option<Vec<f64>>,
}

impl CalibrationSet {
    pub fn new(traces: Radargram, plate_peak_window: (f64, f64), timestamps: Option<Vec<f64>>) -> Result<Self> {
        let cs = CalibrationSet { traces, plate_peak_window, timestamps };
        cs.validate()?;
        Ok(cs)
    }

    pub fn validate(&self) -> Result<()> {
        self.traces.validate()?;
        if self.traces.n_traces() < 2 {
            return Err(Error::validation("traces", "a calibration set needs at least two traces"));
        }
        let (lo, hi) = self.plate_peak_window;
        let first = &self.traces.traces[0];
        let end = first.time(first.len() - 1);
        if !(hi > lo) || lo < first.t0 || hi > end {
            return Err(Error::validation("plate_peak_window", "must be a non-empty window inside the trace span"));
        }
        if let Some(ts) = &self.timestamps {
            if ts.len() != self.traces.n_traces() {
                return Err(Error::Shape(format!("{} timestamps for {} traces", ts.len(), self.traces.n_traces())));
            }
            if ts.windows(2).any(|w| !(w[1] >= w[0])) {
                return Err(Error::validation("timestamps", "must be non-decreasing"));
            }
        }
        Ok(())
    }

    /// Plate echo of every trace: sample index and absolute peak amplitude.
    pub fn plate_peaks(&self) -> Vec<(usize, f64)> {
        self.traces.traces.iter().map(|t| plate_peak(t, self.plate_peak_window)).collect()
    }
}

fn plate_peak(t: &Trace, window: (f64, f64)) -> (usize, f64) {
    let (a, b) = (t.index_of(window.0), t.index_of(window.1));
    (a..=b).map(|i| (i, t.samples[i].abs())).fold((a, f64::NEG_INFINITY), |m, p| if p.1 > m.1 { p } else { m })
}

/// Mean over traces of the largest late amplitude divided by the plate peak.
///
/// The late part starts at the end of the plate window and lasts half of the
/// recorded time window.
pub fn noise_to_signal(cs: &CalibrationSet) -> Result<f64> {
    cs.validate()?;
    let mut sum = 0.0;
    for t in &cs.traces.traces {
        let (_, peak) = plate_peak(t, cs.plate_peak_window);
        if peak == 0.0 {
            return Err(Error::domain("plate echo has zero amplitude"));
        }
        let start = t.index_of(cs.plate_peak_window.1) + 1;
        let end = (start + t.len() / 2).min(t.len());
        let noise = t.samples[start.min(end)..end].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        sum += noise / peak;
    }
    Ok(sum / cs.traces.n_traces() as f64)
}

/// Spread of the plate peaks relative to their mean.
pub fn amplitude_jitter(cs: &CalibrationSet) -> Result<f64> {
    cs.validate()?;
    let peaks: Vec<f64> = cs.plate_peaks().into_iter().map(|p| p.1).collect();
    spread_over(&peaks, peaks.iter().sum::<f64>() / peaks.len() as f64)
}

fn spread_over(values: &[f64], reference: f64) -> Result<f64> {
    if reference == 0.0 {
        return Err(Error::domain("reference amplitude is zero"));
    }
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok((max - min) / reference)
}

/// Spread of the times taken to acquire fixed-size batches of traces,
/// relative to the shortest one.
pub fn time_jitter(durations: &[f64]) -> Result<f64> {
    if durations.len() < 2 {
        return Err(Error::validation("durations", "need at least two durations"));
    }
    if durations.iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
        return Err(Error::domain("durations must be positive"));
    }
    let max = durations.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = durations.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok((max - min) / min)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LongTermStability {
    /// Plate-peak spread after warm-up relative to the peak at the end of warm-up.
    pub lav: f64,
    /// Spread of the peak lags relative to the duration of the test.
    pub lts: f64,
}

/// Long-term amplitude variation and time-window shifting of a recording
/// spanning at least `horizon` seconds.
///
/// The amplitude reference is the first trace taken at or after twenty
/// minutes; the lag of a trace is the time from its first sample to its
/// largest absolute amplitude.
pub fn long_term_stability(cs: &CalibrationSet, horizon: f64) -> Result<LongTermStability> {
    cs.validate()?;
    let ts = cs.timestamps.as_ref().ok_or_else(|| Error::validation("timestamps", "required for long-term stability"))?;
    let start = ts[0];
    let duration = ts[ts.len() - 1] - start;
    if duration < horizon {
        return Err(Error::validation("timestamps", format!("recording spans {duration} s, less than {horizon} s")));
    }
    let peaks = cs.plate_peaks();
    let first = ts
        .iter()
        .position(|t| t - start >= WARM_UP)
        .ok_or_else(|| Error::validation("timestamps", "no trace at or after the twenty-minute mark"))?;
    let late: Vec<f64> = peaks[first..].iter().map(|p| p.1).collect();
    let lav = spread_over(&late, late[0])?;
    if duration <= 0.0 {
        return Err(Error::domain("recording has zero duration"));
    }
    let lags: Vec<f64> = cs
        .traces
        .traces
        .iter()
        .map(|t| {
            let k = (0..t.len()).fold(0, |b, i| if t.samples[i].abs() > t.samples[b].abs() { i } else { b });
            k as f64 * t.dt
        })
        .collect();
    let lmax = lags.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lmin = lags.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(LongTermStability { lav, lts: (lmax - lmin) / duration })
}

/// Plate peak under water relative to the same plate in air.
pub fn penetration_index(a_water: f64, a_air: f64) -> Result<f64> {
    if !(a_air > 0.0) {
        return Err(Error::domain("dry plate amplitude must be positive"));
    }
    Ok(a_water / a_air)
}

/// One metric with its verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricScore {
    pub name: String,
    pub value: f64,
    /// Upper limit, when one applies.
    pub limit: Option<f64>,
    pub pass: Option<bool>,
}

impl MetricScore {
    pub fn new(name: &str, value: f64, limit: Option<f64>) -> Self {
        MetricScore { name: name.into(), value, limit, pass: limit.map(|l| value <= l) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scorecard {
    pub metrics: Vec<MetricScore>,
    /// Metrics that could not be computed, with the reason.
    pub skipped: Vec<(String, String)>,
}

impl Scorecard {
    /// True when every metric with a limit passes.
    pub fn pass(&self) -> bool {
        self.metrics.iter().all(|m| m.pass != Some(false))
    }

    pub fn get(&self, name: &str) -> Option<&MetricScore> {
        self.metrics.iter().find(|m| m.name == name)
    }
}

/// Everything computable from `cs` and the optional batch durations.
pub fn scorecard(cs: &CalibrationSet, durations: Option<&[f64]>, horizon: f64) -> Result<Scorecard> {
    cs.validate()?;
    let mut card = Scorecard { metrics: Vec::new(), skipped: Vec::new() };
    let mut push = |name: &str, r: Result<f64>, limit: Option<f64>| match r {
        Ok(v) => card.metrics.push(MetricScore::new(name, v, limit)),
        Err(e) => card.skipped.push((name.to_string(), e.to_string())),
    };
    push("noise_to_signal", noise_to_signal(cs), Some(NOISE_TO_SIGNAL_LIMIT));
    push("amplitude_jitter", amplitude_jitter(cs), Some(AMPLITUDE_JITTER_LIMIT));
    match durations {
        Some(d) => push("time_jitter", time_jitter(d), Some(TIME_JITTER_LIMIT)),
        None => push("time_jitter", Err(Error::validation("durations", "not supplied")), None),
    }
    match &cs.timestamps {
        Some(_) => {
            let lt = long_term_stability(cs, horizon);
            push("long_term_amplitude_variation", lt.clone().map(|l| l.lav), Some(LONG_TERM_AMPLITUDE_LIMIT));
            push("long_term_time_shift", lt.map(|l| l.lts), None);
        }
        None => push("long_term_stability", Err(Error::validation("timestamps", "not supplied")), None),
    }
    Ok(card)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plate_set(peaks: &[f64], late: f64, timestamps: Option<Vec<f64>>) -> CalibrationSet {
        let traces = peaks
            .iter()
            .map(|p| {
                let mut s = vec![0.0; 200];
                s[20] = *p;
                s[100] = late;
                Trace::new(s, 1e-10, 0.0, 0.0).unwrap()
            })
            .collect();
        CalibrationSet::new(Radargram::new(traces, 1.0, 0.0).unwrap(), (1e-9, 3e-9), timestamps).unwrap()
    }

    #[test]
    fn noise_ratio() {
        let cs = plate_set(&[1.0, 1.0, 1.0], 0.02, None);
        assert!((noise_to_signal(&cs).unwrap() - 0.02).abs() < 1e-12);
        let clean = plate_set(&[1.0, 1.0], 0.0, None);
        assert_eq!(noise_to_signal(&clean).unwrap(), 0.0);
        let dead = plate_set(&[0.0, 0.0], 0.0, None);
        assert!(noise_to_signal(&dead).is_err());
    }

    #[test]
    fn amplitude_jitter_example() {
        let mut p = vec![1.0; 100];
        p[0] = 1.01;
        p[1] = 0.99;
        let cs = plate_set(&p, 0.0, None);
        assert!((amplitude_jitter(&cs).unwrap() - 0.02).abs() < 1e-12);
        assert_eq!(amplitude_jitter(&plate_set(&[0.7; 5], 0.0, None)).unwrap(), 0.0);
    }

    #[test]
    fn time_jitter_example() {
        assert!((time_jitter(&[1.0, 1.005]).unwrap() - 0.005).abs() < 1e-12);
        assert_eq!(time_jitter(&[2.0, 2.0, 2.0]).unwrap(), 0.0);
        assert!(time_jitter(&[1.0, 0.0]).is_err());
        assert!(time_jitter(&[1.0]).is_err());
    }

    #[test]
    fn long_term_drift() {
        let ts: Vec<f64> = (0..61).map(|k| 120.0 * k as f64).collect();
        let peaks: Vec<f64> = ts.iter().map(|t| if *t < WARM_UP { 0.9 } else { 1.0 + 0.02 * (t - WARM_UP) / (7200.0 - WARM_UP) }).collect();
        let cs = plate_set(&peaks, 0.0, Some(ts));
        let lt = long_term_stability(&cs, 7200.0).unwrap();
        assert!((lt.lav - 0.02).abs() < 1e-12);
        assert_eq!(lt.lts, 0.0);
        assert!(long_term_stability(&cs, 8000.0).is_err());
    }

    #[test]
    fn long_term_needs_timestamps() {
        let cs = plate_set(&[1.0, 1.0], 0.0, None);
        assert!(long_term_stability(&cs, 0.0).is_err());
        let short = plate_set(&[1.0, 1.0], 0.0, Some(vec![0.0, 60.0]));
        assert!(long_term_stability(&short, 0.0).is_err());
    }

    #[test]
    fn penetration() {
        assert_eq!(penetration_index(0.3, 1.0).unwrap(), 0.3);
        assert_eq!(penetration_index(0.8, 0.8).unwrap(), 1.0);
        assert!(penetration_index(0.3, 0.0).is_err());
    }

    #[test]
    fn scorecard_verdicts() {
        let mut p = vec![1.0; 100];
        p[0] = 1.02;
        let cs = plate_set(&p, 0.01, None);
        let card = scorecard(&cs, Some(&[1.0, 1.001]), 7200.0).unwrap();
        assert_eq!(card.get("noise_to_signal").unwrap().pass, Some(true));
        assert_eq!(card.get("amplitude_jitter").unwrap().pass, Some(false));
        assert_eq!(card.get("time_jitter").unwrap().pass, Some(true));
        assert!(!card.pass());
        assert_eq!(card.skipped.len(), 1);
    }
}
