//! A-scan and B-scan containers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One A-scan: uniformly sampled field amplitudes at a single position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub samples: Vec<f64>,
    /// Sample interval in seconds.
    pub dt: f64,
    /// Time of the first sample in seconds.
    pub t0: f64,
    /// Along-track position in metres.
    pub x: f64,
}

impl Trace {
    pub fn new(samples: Vec<f64>, dt: f64, t0: f64, x: f64) -> Result<Self> {
        let t = Trace { samples, dt, t0, x };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::validation("dt", "must be positive and finite"));
        }
        if self.samples.len() < 2 {
            return Err(Error::validation("samples", "need at least 2 samples"));
        }
        if let Some(i) = self.samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::validation("samples", format!("non-finite value at index {i}")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Time of sample `i`.
    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    /// Index of the sample nearest to time `t`, clamped to the trace.
    pub fn index_of(&self, t: f64) -> usize {
        let k = ((t - self.t0) / self.dt).round();
        k.clamp(0.0, (self.samples.len() - 1) as f64) as usize
    }

    /// Same metadata, new samples.
    pub fn with_samples(&self, samples: Vec<f64>) -> Trace {
        Trace { samples, dt: self.dt, t0: self.t0, x: self.x }
    }

    pub fn same_shape(&self, other: &Trace) -> bool {
        self.samples.len() == other.samples.len()
            && self.dt == other.dt
            && self.t0 == other.t0
    }

    /// Sample-wise difference `self - other`.
    pub fn minus(&self, other: &Trace) -> Result<Trace> {
        if self.samples.len() != other.samples.len() {
            return Err(Error::Shape(format!(
                "trace lengths differ: {} vs {}",
                self.samples.len(),
                other.samples.len()
            )));
        }
        Ok(self.with_samples(self.samples.iter().zip(&other.samples).map(|(a, b)| a - b).collect()))
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// An ordered set of equally spaced traces (a B-scan).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Radargram {
    pub traces: Vec<Trace>,
    pub dx: f64,
    pub x0: f64,
}

impl Radargram {
    /// Builds a radargram and rewrites each trace position to `x0 + i*dx`.
    pub fn new(mut traces: Vec<Trace>, dx: f64, x0: f64) -> Result<Self> {
        for (i, t) in traces.iter_mut().enumerate() {
            t.x = x0 + i as f64 * dx;
        }
        let r = Radargram { traces, dx, x0 };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dx > 0.0) {
            return Err(Error::validation("dx", "must be positive"));
        }
        let Some(first) = self.traces.first() else {
            return Ok(());
        };
        for (i, t) in self.traces.iter().enumerate() {
            t.validate()?;
            if !t.same_shape(first) {
                return Err(Error::Shape(format!("trace {i} differs in dt, t0 or length")));
            }
        }
        Ok(())
    }

    pub fn n_traces(&self) -> usize {
        self.traces.len()
    }

    pub fn n_samples(&self) -> usize {
        self.traces.first().map_or(0, |t| t.samples.len())
    }

    pub fn dt(&self) -> f64 {
        self.traces.first().map_or(0.0, |t| t.dt)
    }

    pub fn t0(&self) -> f64 {
        self.traces.first().map_or(0.0, |t| t.t0)
    }

    /// Position of trace `i`.
    pub fn position(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    /// Sample-wise mean of all traces.
    pub fn mean_trace(&self) -> Option<Trace> {
        let first = self.traces.first()?;
        let n = self.traces.len() as f64;
        let mut acc = vec![0.0; first.samples.len()];
        for t in &self.traces {
            for (a, v) in acc.iter_mut().zip(&t.samples) {
                *a += v;
            }
        }
        acc.iter_mut().for_each(|a| *a /= n);
        Some(first.with_samples(acc))
    }

    /// Same geometry, traces replaced by `f(trace)`.
    pub fn map_traces<F>(&self, f: F) -> Result<Radargram>
    where
        F: Fn(&Trace) -> Result<Trace>,
    {
        let traces = self.traces.iter().map(f).collect::<Result<Vec<_>>>()?;
        Ok(Radargram { traces, dx: self.dx, x0: self.x0 })
    }
}
