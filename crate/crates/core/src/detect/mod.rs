//! Void detection: layer permittivities, void height and extent, fill type.
//!
//! [`detect_pipeline`] chains the pieces for one preprocessed B-scan:
//! it looks for an interruption of the base/subgrade echo, estimates the
//! permittivity below the void top from reflection amplitudes to classify the
//! fill, measures the height of air voids by regularized deconvolution (or
//! template matching when a library is supplied) and converts the interrupted
//! length into a void length.

mod classify;
mod deconv;
mod extent;
mod layers;
mod lsq;
mod picks;

pub use classify::{classify_void_fill, FillClass, FillThresholds};
pub use deconv::{
    build_wavelet_matrix, deconvolve_naive, deconvolve_tikhonov, discrepancy_alpha, opposite_spike_pair,
    wavelet_from_reference, AlphaChoice, SpikePair, WaveletMatrix, REFERENCE_ALPHA,
};
pub use extent::{
    estimate_extent, extract_feature_length, fit_extent_regression, horizon_amplitudes, ExtentModel, FeatureLength,
    ENTER_DEVIATION, EXIT_DEVIATION, REFERENCE_EXTENT_PAIRS,
};
pub use layers::{
    cmp_estimate, eps_from_core, eps_layer_n, eps_profile, eps_surface, layer_thickness, resolution_limit, CmpEstimate,
};
pub use lsq::{build_template_library, identify_height_lsq, LsqMatch, TemplateLibrary};
pub use picks::{pick_reflections, window_extremum, ReflectionPick};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::C0;
use crate::trace::{Radargram, Trace};

/// How far the top and bottom echoes of an air void overlap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapStage {
    /// Echo spacing of at least one period: two distinct wavelets.
    Separated,
    /// Between half a period and a period: a dip between merged peaks.
    Valley,
    /// Under half a period: a single merged peak.
    SinglePeak,
}

impl OverlapStage {
    pub fn from_spacing(delta_t: f64, period: f64) -> Self {
        if delta_t >= period {
            OverlapStage::Separated
        } else if delta_t >= 0.5 * period {
            OverlapStage::Valley
        } else {
            OverlapStage::SinglePeak
        }
    }
}

fn default_true() -> bool {
    true
}

fn default_noise_floor() -> f64 {
    1e-3
}

fn default_wavelet_periods() -> f64 {
    4.0
}

fn default_min_ratio() -> f64 {
    0.3
}

fn default_max_height() -> f64 {
    0.3
}

/// Parameters of [`detect_pipeline`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectConfig {
    /// Antenna centre frequency in Hz.
    pub fc_hz: f64,
    /// Time windows (s) of the surface echo followed by each interface echo
    /// down to the base/subgrade horizon, where voids are sought.
    pub echo_windows: Vec<(f64, f64)>,
    #[serde(default)]
    pub thresholds: FillThresholds,
    /// Treat any estimate below the base-layer permittivity as air.
    #[serde(default = "default_true")]
    pub air_below_base: bool,
    #[serde(default = "ExtentModel::reference")]
    pub extent_model: ExtentModel,
    /// Lower bound on the noise level used to choose the regularization, as
    /// a fraction of the trace peak.
    #[serde(default = "default_noise_floor")]
    pub noise_floor: f64,
    /// Deconvolution wavelet length in periods of `fc_hz`.
    #[serde(default = "default_wavelet_periods")]
    pub wavelet_periods: f64,
    /// Weakest accepted void-bottom spike relative to the void-top spike.
    #[serde(default = "default_min_ratio")]
    pub min_spike_ratio: f64,
    /// Tallest void considered, in metres.
    #[serde(default = "default_max_height")]
    pub max_height_m: f64,
}

impl DetectConfig {
    pub fn new(fc_hz: f64, echo_windows: Vec<(f64, f64)>) -> Self {
        DetectConfig {
            fc_hz,
            echo_windows,
            thresholds: FillThresholds::default(),
            air_below_base: true,
            extent_model: ExtentModel::reference(),
            noise_floor: default_noise_floor(),
            wavelet_periods: default_wavelet_periods(),
            min_spike_ratio: default_min_ratio(),
            max_height_m: default_max_height(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: DetectConfig = serde_json::from_str(text).map_err(|e| Error::validation("detect config", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fc_hz > 0.0) {
            return Err(Error::validation("fc_hz", "must be positive"));
        }
        if self.echo_windows.len() < 2 {
            return Err(Error::validation("echo_windows", "need the surface window and at least one interface window"));
        }
        if let Some(w) = self.echo_windows.iter().find(|w| !(w.1 > w.0)) {
            return Err(Error::validation("echo_windows", format!("window {w:?} is empty")));
        }
        if self.echo_windows.windows(2).any(|p| p[1].0 < p[0].0) {
            return Err(Error::validation("echo_windows", "windows must be ordered by time"));
        }
        self.thresholds.validate()?;
        if !(self.noise_floor >= 0.0) || !(self.wavelet_periods > 0.0) || !(self.max_height_m > 0.0) {
            return Err(Error::validation("deconvolution", "noise_floor >= 0, wavelet_periods > 0 and max_height_m > 0 required"));
        }
        if !(self.min_spike_ratio > 0.0 && self.min_spike_ratio <= 1.0) {
            return Err(Error::validation("min_spike_ratio", "must lie in (0, 1]"));
        }
        Ok(())
    }

    fn horizon(&self) -> (f64, f64) {
        *self.echo_windows.last().expect("validated")
    }
}

/// A stage that failed, and why.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageError {
    pub stage: String,
    pub message: String,
}

/// Intermediate numbers behind a [`DetectionReport`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub plate_amplitude: f64,
    pub feature: Option<FeatureLength>,
    /// Trace over the centre of the anomaly.
    pub anomaly_trace: Option<usize>,
    /// Permittivities from the mean undisturbed trace, surface layer first.
    pub eps_background: Option<Vec<f64>>,
    /// Permittivities at the anomaly trace; the last entry is the fill.
    pub eps_anomaly: Option<Vec<f64>>,
    /// Upper bound of the air band actually applied.
    pub air_max_applied: Option<f64>,
    pub alpha: Option<AlphaChoice>,
    pub spikes: Option<SpikePair>,
    pub sse: Option<Vec<f64>>,
    pub overlap: Option<OverlapStage>,
    pub notes: Vec<String>,
    pub errors: Vec<StageError>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub void_present: bool,
    pub fill_class: FillClass,
    pub height_m: Option<f64>,
    pub extent_m: Option<f64>,
    /// Algorithms that produced a result, in order.
    pub method: Vec<String>,
    pub diagnostics: Diagnostics,
}

impl DetectionReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Signed echo amplitudes of `t` in each window, with the plate polarity
/// taken as positive.
fn echo_amplitudes(t: &Trace, windows: &[(f64, f64)], plate_sign: f64) -> Result<Vec<(f64, f64)>> {
    windows.iter().map(|w| window_extremum(t, *w).map(|(time, a)| (time, plate_sign * a))).collect()
}

/// Signed amplitudes of `t` at the given echo times.
fn amplitudes_at(t: &Trace, times: &[f64], plate_sign: f64) -> Vec<f64> {
    times.iter().map(|&time| plate_sign * t.samples[t.index_of(time)]).collect()
}

fn mean_of(r: &Radargram, indices: &[usize]) -> Option<Trace> {
    let first = &r.traces[*indices.first()?];
    let mut acc = vec![0.0; first.len()];
    for &i in indices {
        for (a, v) in acc.iter_mut().zip(&r.traces[i].samples) {
            *a += v;
        }
    }
    let k = indices.len() as f64;
    Some(first.with_samples(acc.into_iter().map(|v| v / k).collect()))
}

/// Air-void height from the spacing of the two spikes that the void top and
/// bottom leave in the deconvolved trace.
fn height_by_deconvolution(
    trace: &Trace,
    plate: &Trace,
    cfg: &DetectConfig,
    diag: &mut Diagnostics,
) -> Result<Option<f64>> {
    let dt = trace.dt;
    let max_len = ((cfg.wavelet_periods / cfg.fc_hz) / dt).round().max(1.0) as usize;
    let (wavelet, _) = wavelet_from_reference(plate, 1e-2, max_len)?;
    let peak_offset = wavelet.iter().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).map_or(0, |p| p.0);
    let scale = plate.max_abs();
    let y: Vec<f64> = trace.samples.iter().map(|v| v / scale).collect();
    let e = build_wavelet_matrix(&wavelet, y.len())?;

    // Noise level from the quiet samples ahead of the surface echo, which
    // starts one wavelet peak offset before its window.
    let quiet_end = trace.index_of(cfg.echo_windows[0].0).saturating_sub(peak_offset);
    let peak = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let quiet = &y[..quiet_end];
    let rms = if quiet.is_empty() { 0.0 } else { (quiet.iter().map(|v| v * v).sum::<f64>() / quiet.len() as f64).sqrt() };
    let noise = rms.max(cfg.noise_floor * peak);
    let choice = discrepancy_alpha(&y, &e, noise)?;
    let h = deconvolve_tikhonov(&y, &e, choice.alpha)?;
    diag.alpha = Some(choice);

    let (wlo, whi) = cfg.horizon();
    let lo = trace.index_of(wlo).saturating_sub(peak_offset);
    let extra = (2.0 * cfg.max_height_m / C0 / dt).ceil() as usize;
    let hi = (trace.index_of(whi) + extra).saturating_sub(peak_offset);
    let pair = opposite_spike_pair(&h, lo, hi + 1, cfg.min_spike_ratio);
    diag.spikes = pair;
    Ok(pair.map(|p| {
        let delta_t = p.separation() as f64 * dt;
        diag.overlap = Some(OverlapStage::from_spacing(delta_t, 1.0 / cfg.fc_hz));
        C0 * delta_t / 2.0
    }))
}

/// Runs the detection chain on a preprocessed radargram (direct wave removed,
/// time zero aligned).
///
/// `plate` is a metal-plate echo recorded with the same antenna and
/// processing; its peak sets the amplitude reference and its shape the
/// deconvolution wavelet. A template `library` switches air-void height
/// estimation from deconvolution to template matching.
///
/// Only malformed inputs are returned as errors; failures of individual
/// stages are recorded in the report.
pub fn detect_pipeline(
    r: &Radargram,
    cfg: &DetectConfig,
    plate: &Trace,
    library: Option<&TemplateLibrary>,
) -> Result<DetectionReport> {
    r.validate()?;
    cfg.validate()?;
    plate.validate()?;
    if ((plate.dt - r.dt()) / r.dt()).abs() > 1e-9 {
        return Err(Error::Shape(format!("plate dt {:e} differs from radargram dt {:e}", plate.dt, r.dt())));
    }
    let plate_a = plate.samples.iter().fold(0.0f64, |b, &v| if v.abs() > b.abs() { v } else { b });
    if plate_a == 0.0 {
        return Err(Error::validation("plate", "plate echo is identically zero"));
    }
    let plate_sign = plate_a.signum();
    let ap = plate_a.abs();

    let mut diag = Diagnostics { plate_amplitude: ap, ..Default::default() };
    let mut method = Vec::new();
    let report = |present: bool, fill: FillClass, height: Option<f64>, extent: Option<f64>, method: Vec<String>, diag: Diagnostics| {
        DetectionReport { void_present: present, fill_class: fill, height_m: height, extent_m: extent, method, diagnostics: diag }
    };
    let record = |diag: &mut Diagnostics, stage: &str, e: &Error| {
        diag.errors.push(StageError { stage: stage.into(), message: e.to_string() });
    };

    // Anomaly search.
    let feature = match extract_feature_length(r, cfg.horizon()) {
        Ok(f) => f,
        Err(e) => {
            if e != Error::NoAnomaly {
                record(&mut diag, "feature_length", &e);
            }
            return Ok(report(false, FillClass::Unknown, None, None, method, diag));
        }
    };
    method.push("feature_length".to_string());
    let center = feature.center();
    let anomaly = (0..r.n_traces())
        .min_by(|&a, &b| (r.position(a) - center).abs().total_cmp(&(r.position(b) - center).abs()))
        .expect("radargram has traces");
    let outside: Vec<usize> = (0..r.n_traces()).filter(|&i| i <= feature.left_index || i >= feature.right_index).collect();
    diag.anomaly_trace = Some(anomaly);
    diag.feature = Some(feature.clone());

    // Permittivities and fill class.
    let mut air_max = cfg.thresholds.air_max;
    // Echo times of the undisturbed section; the anomaly trace is read at the
    // same times so that a void-bottom echo following within the window is
    // not taken for the void top.
    let mut echo_times = None;
    if let Some(bg) = mean_of(r, &outside) {
        match echo_amplitudes(&bg, &cfg.echo_windows, plate_sign) {
            Ok(picks) => {
                let amps: Vec<f64> = picks.iter().map(|p| p.1).collect();
                echo_times = Some(picks.iter().map(|p| p.0).collect::<Vec<f64>>());
                match eps_profile(&amps, ap) {
                    Ok(eps) => {
                        let base = eps[eps.len() - 2];
                        if cfg.air_below_base && base > air_max && base <= cfg.thresholds.grout_min {
                            air_max = base;
                        }
                        diag.eps_background = Some(eps);
                    }
                    Err(e) => record(&mut diag, "background_permittivity", &e),
                }
            }
            Err(e) => record(&mut diag, "background_permittivity", &e),
        }
    }
    diag.air_max_applied = Some(air_max);
    let thresholds = FillThresholds { air_max, ..cfg.thresholds };
    let anomaly_amps = match &echo_times {
        Some(times) => Ok(amplitudes_at(&r.traces[anomaly], times, plate_sign)),
        None => echo_amplitudes(&r.traces[anomaly], &cfg.echo_windows, plate_sign).map(|p| p.into_iter().map(|p| p.1).collect()),
    };
    let fill = match anomaly_amps
        .and_then(|a| eps_profile(&a, ap))
        .and_then(|eps| {
            let fill = classify_void_fill(*eps.last().expect("non-empty"), &thresholds);
            diag.eps_anomaly = Some(eps);
            fill
        }) {
        Ok(f) => {
            method.push("amplitude_permittivity".to_string());
            f
        }
        Err(e) => {
            record(&mut diag, "fill_permittivity", &e);
            FillClass::Unknown
        }
    };

    // Height.
    let mut height = None;
    match fill {
        FillClass::Air => {
            let trace = &r.traces[anomaly];
            if let Some(lib) = library {
                match identify_height_lsq(trace, lib) {
                    Ok(m) => {
                        method.push("template_lsq".to_string());
                        height = Some(m.height);
                        diag.overlap = Some(OverlapStage::from_spacing(2.0 * m.height / C0, 1.0 / cfg.fc_hz));
                        diag.sse = Some(m.sse);
                    }
                    Err(e) => record(&mut diag, "template_lsq", &e),
                }
            } else {
                match height_by_deconvolution(trace, plate, cfg, &mut diag) {
                    Ok(Some(h)) => {
                        method.push("tikhonov_deconvolution".to_string());
                        height = Some(h);
                    }
                    Ok(None) => diag.notes.push("void top and bottom echoes could not be separated".into()),
                    Err(e) => record(&mut diag, "tikhonov_deconvolution", &e),
                }
            }
        }
        FillClass::Water => diag.notes.push("height of a water-filled void is not resolvable".into()),
        FillClass::Grout | FillClass::Unknown => diag.notes.push("height is only estimated for air-filled voids".into()),
    }

    // Extent.
    let extent = match estimate_extent(feature.d, &cfg.extent_model) {
        Ok(l) => {
            method.push("extent_regression".to_string());
            Some(l)
        }
        Err(e) => {
            record(&mut diag, "extent", &e);
            None
        }
    };
    Ok(report(true, fill, height, extent, method, diag))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlap_stages() {
        assert_eq!(OverlapStage::from_spacing(2.0, 1.0), OverlapStage::Separated);
        assert_eq!(OverlapStage::from_spacing(0.6, 1.0), OverlapStage::Valley);
        assert_eq!(OverlapStage::from_spacing(0.2, 1.0), OverlapStage::SinglePeak);
    }

    #[test]
    fn config_defaults_from_json() {
        let cfg = DetectConfig::from_json(r#"{"fc_hz": 8e8, "echo_windows": [[1e-9, 2e-9], [3e-9, 4e-9]]}"#).unwrap();
        assert_eq!(cfg, DetectConfig::new(8e8, vec![(1e-9, 2e-9), (3e-9, 4e-9)]));
        assert!(DetectConfig::from_json(r#"{"fc_hz": 8e8, "echo_windows": [[1e-9, 2e-9]]}"#).is_err());
        assert!(DetectConfig::from_json(r#"{"fc_hz": 8e8, "echo_windows": [], "bogus": 1}"#).is_err());
    }

    #[test]
    fn flat_section_reports_no_void() {
        let dt = 1e-11;
        let mk = |a0: f64, a1: f64| {
            let mut s = vec![0.0; 600];
            s[100] = a0;
            s[400] = a1;
            Trace::new(s, dt, 0.0, 0.0).unwrap()
        };
        let r = Radargram::new((0..20).map(|_| mk(-0.4, 0.1)).collect(), 0.02, 0.0).unwrap();
        let plate = mk(1.0, 0.0);
        let cfg = DetectConfig::new(8e8, vec![(0.9e-9, 1.1e-9), (3.9e-9, 4.1e-9)]);
        let rep = detect_pipeline(&r, &cfg, &plate, None).unwrap();
        assert!(!rep.void_present);
        assert!(rep.height_m.is_none() && rep.extent_m.is_none());
    }

    #[test]
    fn water_like_anomaly_is_classified_without_height() {
        let dt = 1e-11;
        let mk = |a0: f64, a1: f64| {
            let mut s = vec![0.0; 600];
            s[100] = a0;
            s[400] = a1;
            Trace::new(s, dt, 0.0, 0.0).unwrap()
        };
        // Surface of a permittivity-6 layer over a half-space; in the middle
        // the half-space is much denser.
        let r0 = -((6f64.sqrt() - 1.0) / (6f64.sqrt() + 1.0));
        let traces = (0..30).map(|i| if (12..18).contains(&i) { mk(r0, -0.45) } else { mk(r0, -0.05) }).collect();
        let r = Radargram::new(traces, 0.02, 0.0).unwrap();
        let plate = mk(-1.0, 0.0);
        let cfg = DetectConfig::new(8e8, vec![(0.9e-9, 1.1e-9), (3.9e-9, 4.1e-9)]);
        let rep = detect_pipeline(&r, &cfg, &plate, None).unwrap();
        assert!(rep.void_present);
        assert_eq!(rep.fill_class, FillClass::Water);
        assert!(rep.height_m.is_none());
        let eps = rep.diagnostics.eps_background.unwrap();
        assert!((eps[0] - 6.0).abs() < 1e-9);
        assert!((rep.diagnostics.feature.unwrap().d - 0.14).abs() < 1e-12);
    }
}
