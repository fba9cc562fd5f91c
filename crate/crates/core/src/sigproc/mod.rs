//! Radargram processing chain: editing, drift removal, filtering and gain.
//!
//! Every operation preserves the sample interval, start time, sample count and
//! trace count. Steps can be chained through a JSON [`PipelineConfig`].

pub(crate) mod edit;
mod filter;
mod gain;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use edit::{
    equalize_traces, remove_dc, remove_direct_wave, repair_traces, restore_clipped, reverse_line,
    time_zero_align,
};
pub use filter::{
    background_removal, bandpass, bandpass_kernel, default_band, smooth, spatial_moving_average,
    time_varying_bandpass, tx_filter, BandKnot, SmoothKind,
};
pub use gain::{gain_agc, gain_custom, gain_spreading, AgcResult, GainKnot};

use crate::error::{Error, Result};
use crate::trace::{Radargram, Trace};

/// Where the direct-wave reference of `remove_direct_wave` comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceSpec {
    /// Explicit samples.
    Samples(Vec<f64>),
    /// Mean of traces `first..=last` of the radargram itself (sky shots).
    TraceMean { first: usize, last: usize },
}

fn default_one() -> usize {
    1
}

fn default_exponent() -> f64 {
    1.0
}

/// One processing step. Serialised as `{"op": name, "params": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum Step {
    RepairTraces { dead: Vec<usize> },
    ReverseLine {},
    RestoreClipped { clip_level: f64 },
    TimeZeroAlign { search_window: (f64, f64) },
    EqualizeTraces {},
    RemoveDc {
        #[serde(default = "default_one")]
        n_segments: usize,
    },
    RemoveDirectWave { reference: ReferenceSpec },
    Bandpass {
        #[serde(default)]
        f_lo: Option<f64>,
        #[serde(default)]
        f_hi: Option<f64>,
        #[serde(default)]
        fc: Option<f64>,
    },
    TimeVaryingBandpass { schedule: Vec<BandKnot> },
    Smooth { window: usize, kind: SmoothKind },
    SpatialMovingAverage { width: usize },
    BackgroundRemoval {},
    TxFilter { t_window: usize, x_window: usize, kind: SmoothKind },
    GainSpreading {
        t_ref: f64,
        #[serde(default = "default_exponent")]
        exponent: f64,
    },
    GainAgc { window: usize },
    GainCustom { curve: Vec<GainKnot> },
}

impl Step {
    pub fn name(&self) -> &'static str {
        match self {
            Step::RepairTraces { .. } => "repair_traces",
            Step::ReverseLine {} => "reverse_line",
            Step::RestoreClipped { .. } => "restore_clipped",
            Step::TimeZeroAlign { .. } => "time_zero_align",
            Step::EqualizeTraces {} => "equalize_traces",
            Step::RemoveDc { .. } => "remove_dc",
            Step::RemoveDirectWave { .. } => "remove_direct_wave",
            Step::Bandpass { .. } => "bandpass",
            Step::TimeVaryingBandpass { .. } => "time_varying_bandpass",
            Step::Smooth { .. } => "smooth",
            Step::SpatialMovingAverage { .. } => "spatial_moving_average",
            Step::BackgroundRemoval {} => "background_removal",
            Step::TxFilter { .. } => "tx_filter",
            Step::GainSpreading { .. } => "gain_spreading",
            Step::GainAgc { .. } => "gain_agc",
            Step::GainCustom { .. } => "gain_custom",
        }
    }
}

/// Ordered list of processing steps.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PipelineConfig {
    pub steps: Vec<Step>,
}

impl PipelineConfig {
    /// Parses a JSON step list. `params` may be omitted for steps whose
    /// parameters all have defaults.
    pub fn from_json(text: &str) -> Result<Self> {
        let err = |e: serde_json::Error| Error::validation("pipeline", e.to_string());
        let mut v: serde_json::Value = serde_json::from_str(text).map_err(err)?;
        if let Some(items) = v.as_array_mut() {
            for item in items {
                if let Some(obj) = item.as_object_mut() {
                    obj.entry("params").or_insert_with(|| serde_json::json!({}));
                }
            }
        }
        serde_json::from_value(v).map_err(err)
    }
}

/// Record of one executed step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub index: usize,
    pub op: String,
    pub params: serde_json::Value,
    /// Traces whose AGC windows were all zero, as `(trace, window)` pairs.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub zero_windows: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineResult {
    pub radargram: Radargram,
    pub provenance: Vec<StepRecord>,
}

fn per_trace<F>(r: &Radargram, f: F) -> Result<Radargram>
where
    F: Fn(&Trace) -> Result<Trace> + Sync + Send,
{
    let traces = r.traces.par_iter().map(f).collect::<Result<Vec<_>>>()?;
    Ok(Radargram { traces, dx: r.dx, x0: r.x0 })
}

fn apply(r: &Radargram, step: &Step, record: &mut StepRecord) -> Result<Radargram> {
    match step {
        Step::RepairTraces { dead } => repair_traces(r, dead),
        Step::ReverseLine {} => Ok(reverse_line(r)),
        Step::RestoreClipped { clip_level } => per_trace(r, |t| restore_clipped(t, *clip_level)),
        Step::TimeZeroAlign { search_window } => time_zero_align(r, *search_window),
        Step::EqualizeTraces {} => equalize_traces(r),
        Step::RemoveDc { n_segments } => per_trace(r, |t| remove_dc(t, *n_segments)),
        Step::RemoveDirectWave { reference } => {
            let reference = match reference {
                ReferenceSpec::Samples(s) => {
                    let first = r.traces.first().ok_or_else(|| Error::validation("radargram", "empty"))?;
                    first.with_samples(s.clone())
                }
                ReferenceSpec::TraceMean { first, last } => {
                    if first > last || *last >= r.n_traces() {
                        return Err(Error::validation("reference", "trace range out of bounds"));
                    }
                    let sub = Radargram { traces: r.traces[*first..=*last].to_vec(), dx: r.dx, x0: r.x0 };
                    sub.mean_trace().expect("non-empty range")
                }
            };
            remove_direct_wave(r, &reference)
        }
        Step::Bandpass { f_lo, f_hi, fc } => {
            let (lo, hi) = match (f_lo, f_hi, fc) {
                (Some(lo), Some(hi), None) => (*lo, *hi),
                (None, None, Some(fc)) => default_band(*fc),
                _ => return Err(Error::validation("bandpass", "give either f_lo and f_hi, or fc")),
            };
            per_trace(r, |t| bandpass(t, lo, hi))
        }
        Step::TimeVaryingBandpass { schedule } => per_trace(r, |t| time_varying_bandpass(t, schedule)),
        Step::Smooth { window, kind } => per_trace(r, |t| smooth(t, *window, *kind)),
        Step::SpatialMovingAverage { width } => spatial_moving_average(r, *width),
        Step::BackgroundRemoval {} => background_removal(r),
        Step::TxFilter { t_window, x_window, kind } => tx_filter(r, *t_window, *x_window, *kind),
        Step::GainSpreading { t_ref, exponent } => per_trace(r, |t| gain_spreading(t, *t_ref, *exponent)),
        Step::GainAgc { window } => {
            let results = r.traces.par_iter().map(|t| gain_agc(t, *window)).collect::<Result<Vec<_>>>()?;
            let mut traces = Vec::with_capacity(results.len());
            for (j, res) in results.into_iter().enumerate() {
                record.zero_windows.extend(res.zero_windows.iter().map(|&w| (j, w)));
                traces.push(res.trace);
            }
            Ok(Radargram { traces, dx: r.dx, x0: r.x0 })
        }
        Step::GainCustom { curve } => per_trace(r, |t| gain_custom(t, curve)),
    }
}

/// Applies the steps in order. The first failing step aborts the run and is
/// reported with its index.
pub fn run_pipeline(r: &Radargram, cfg: &PipelineConfig) -> Result<PipelineResult> {
    let mut cur = r.clone();
    let mut provenance = Vec::with_capacity(cfg.steps.len());
    for (index, step) in cfg.steps.iter().enumerate() {
        let params = serde_json::to_value(step)
            .ok()
            .and_then(|v| v.get("params").cloned())
            .unwrap_or(serde_json::Value::Null);
        let mut record = StepRecord { index, op: step.name().to_string(), params, zero_windows: Vec::new() };
        cur = apply(&cur, step, &mut record).map_err(|e| Error::Step {
            index,
            op: step.name().to_string(),
            source: Box::new(e),
        })?;
        provenance.push(record);
    }
    Ok(PipelineResult { radargram: cur, provenance })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(v: f64) -> Radargram {
        let traces = (0..4).map(|_| Trace::new(vec![v; 8], 1.0, 0.0, 0.0).unwrap()).collect();
        Radargram::new(traces, 0.5, 0.0).unwrap()
    }

    #[test]
    fn empty_pipeline_is_identity() {
        let r = field(1.0);
        let out = run_pipeline(&r, &PipelineConfig::default()).unwrap();
        assert_eq!(out.radargram, r);
        assert!(out.provenance.is_empty());
    }

    #[test]
    fn dc_then_background_zeroes_constant_field() {
        let cfg = PipelineConfig::from_json(
            r#"[{"op": "remove_dc", "params": {"n_segments": 1}}, {"op": "background_removal"}]"#,
        )
        .unwrap();
        let out = run_pipeline(&field(3.0), &cfg).unwrap();
        assert!(out.radargram.traces.iter().all(|t| t.samples.iter().all(|&v| v == 0.0)));
        assert_eq!(out.provenance.len(), 2);
        assert_eq!(out.provenance[1].op, "background_removal");
    }

    #[test]
    fn failing_step_reports_index() {
        let cfg = PipelineConfig::from_json(r#"[{"op": "reverse_line"}, {"op": "smooth", "params": {"window": 2, "kind": "mean"}}]"#)
            .unwrap();
        match run_pipeline(&field(1.0), &cfg) {
            Err(Error::Step { index, op, .. }) => {
                assert_eq!(index, 1);
                assert_eq!(op, "smooth");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_op_is_rejected() {
        assert!(PipelineConfig::from_json(r#"[{"op": "migrate"}]"#).is_err());
    }

    #[test]
    fn pipeline_is_deterministic() {
        let traces = (0..5)
            .map(|j| Trace::new((0..64).map(|i| ((i * 7 + j * 3) % 11) as f64).collect(), 1e-10, 0.0, 0.0).unwrap())
            .collect();
        let r = Radargram::new(traces, 0.02, 0.0).unwrap();
        let cfg = PipelineConfig::from_json(
            r#"[{"op": "remove_dc"}, {"op": "bandpass", "params": {"fc": 8e8}}, {"op": "gain_agc", "params": {"window": 8}}]"#,
        )
        .unwrap();
        assert_eq!(run_pipeline(&r, &cfg).unwrap(), run_pipeline(&r, &cfg).unwrap());
    }
}
