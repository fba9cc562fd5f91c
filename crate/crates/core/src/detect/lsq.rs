//! Void height by least-squares matching against simulated templates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fdtd::{simulate_ascan, Scene, Void};
use crate::physics::{Material, C0};
use crate::sigproc::edit::shift;
use crate::trace::Trace;

/// Simulated A-scans of one road model over a range of void heights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateLibrary {
    /// Void-free scene, collapsed to the single shot used for every template.
    pub base_scene: Scene,
    pub fill: Material,
    /// Void heights in metres, strictly increasing.
    pub heights: Vec<f64>,
    /// One direct-wave-free trace per height.
    pub templates: Vec<Trace>,
    pub void_center: f64,
    pub void_width: f64,
    /// Sample range `[start, end)` holding the surface reflection, used to
    /// align queries.
    pub surface_window: (usize, usize),
}

fn check_heights(heights: &[f64]) -> Result<()> {
    if heights.is_empty() {
        return Err(Error::validation("heights", "at least one height is required"));
    }
    if heights.iter().any(|h| !(*h > 0.0) || !h.is_finite()) {
        return Err(Error::validation("heights", "heights must be positive"));
    }
    if let Some(w) = heights.windows(2).find(|w| !(w[1] > w[0])) {
        return Err(Error::validation("heights", format!("must be strictly increasing ({} then {})", w[0], w[1])));
    }
    Ok(())
}

impl TemplateLibrary {
    /// Assembles a library from precomputed templates.
    pub fn from_parts(
        base_scene: Scene,
        fill: Material,
        heights: Vec<f64>,
        templates: Vec<Trace>,
        void_geometry: (f64, f64),
        surface_window: (usize, usize),
    ) -> Result<Self> {
        check_heights(&heights)?;
        if templates.len() != heights.len() {
            return Err(Error::Shape(format!("{} heights but {} templates", heights.len(), templates.len())));
        }
        let first = &templates[0];
        for (k, t) in templates.iter().enumerate() {
            t.validate()?;
            if !t.same_shape(first) || t.t0 != first.t0 {
                return Err(Error::Shape(format!("template {k} differs in length, dt or t0")));
            }
        }
        if !(surface_window.0 < surface_window.1 && surface_window.1 <= first.len()) {
            return Err(Error::validation("surface_window", "must be a non-empty range inside the traces"));
        }
        let (void_center, void_width) = void_geometry;
        if !(void_width > 0.0) || !void_width.is_finite() || !void_center.is_finite() {
            return Err(Error::validation("void_width", "must be positive and finite"));
        }
        Ok(TemplateLibrary {
            base_scene: base_scene.without_void(),
            fill,
            heights,
            templates,
            void_center,
            void_width,
            surface_window,
        })
    }

    pub fn len(&self) -> usize {
        self.heights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heights.is_empty()
    }
}

/// Simulates one template per height.
///
/// The void takes its centre and width from `base_scene.void` when present;
/// otherwise it spans the whole model laterally. Each template is a single
/// shot centred over the void with the free-space direct wave subtracted.
pub fn build_template_library(base_scene: &Scene, fill: &Material, heights: &[f64]) -> Result<TemplateLibrary> {
    check_heights(heights)?;
    fill.validate()?;
    let last = base_scene.layers.last().ok_or_else(|| Error::validation("layers", "empty"))?;
    if let Some(h) = heights.iter().find(|h| **h > last.thickness) {
        return Err(Error::validation("heights", format!("{h} m exceeds the deepest layer thickness {} m", last.thickness)));
    }
    let (x_center, width) = match &base_scene.void {
        Some(v) => (v.x_center, v.width),
        None => (0.5 * base_scene.grid.width, 10.0 * base_scene.grid.width),
    };
    let shot = base_scene.without_void().single_shot_at(x_center);
    shot.validate()?;
    let free = simulate_ascan(&shot.free_space(), 0)?;
    let templates = heights
        .par_iter()
        .map(|&h| {
            let v = Void { x_center, width, height: h, fill: fill.clone() };
            simulate_ascan(&shot.with_void(Some(v)), 0)?.minus(&free)
        })
        .collect::<Result<Vec<_>>>()?;

    // Surface echo: direct path to the ground and back, plus the source delay,
    // give or take one period.
    let s = &shot.survey;
    let half_gap = 0.5 * s.tx_rx_gap;
    let t_surface = 2.0 * (s.elevation * s.elevation + half_gap * half_gap).sqrt() / C0 + shot.source.delay();
    let period = 1.0 / shot.source.fc;
    let t = &templates[0];
    let lo = t.index_of(t_surface - period);
    let hi = (t.index_of(t_surface + period) + 1).min(t.len());

    TemplateLibrary::from_parts(shot, fill.clone(), heights.to_vec(), templates, (x_center, width), (lo, hi))
}

/// Outcome of template matching.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsqMatch {
    pub height: f64,
    pub index: usize,
    /// Sum of squared differences for every library height.
    pub sse: Vec<f64>,
    /// Samples by which the query was moved to line up with the library.
    pub shift: isize,
}

/// Lag (in samples) that best lines `query` up with `reference` over `window`,
/// searched within `±max_lag`.
fn alignment_lag(query: &[f64], reference: &[f64], window: (usize, usize), max_lag: usize) -> isize {
    let (lo, hi) = window;
    let n = query.len() as isize;
    let mut best = (0isize, f64::NEG_INFINITY);
    for lag in -(max_lag as isize)..=(max_lag as isize) {
        let mut s = 0.0;
        for i in lo..hi {
            let k = i as isize + lag;
            if k >= 0 && k < n {
                s += query[k as usize] * reference[i];
            }
        }
        if s > best.1 || (s == best.1 && lag.abs() < best.0.abs()) {
            best = (lag, s);
        }
    }
    best.0
}

/// Library height whose template is closest to `query` in the least-squares
/// sense, after aligning the query's surface echo with the library's.
pub fn identify_height_lsq(query: &Trace, lib: &TemplateLibrary) -> Result<LsqMatch> {
    query.validate()?;
    let first = lib.templates.first().ok_or_else(|| Error::validation("library", "empty"))?;
    if query.len() != first.len() || ((query.dt - first.dt) / first.dt).abs() > 1e-9 {
        return Err(Error::Shape(format!(
            "query has {} samples at dt {:e}, library has {} at {:e}",
            query.len(),
            query.dt,
            first.len(),
            first.dt
        )));
    }
    let (lo, hi) = lib.surface_window;
    let lag = alignment_lag(&query.samples, &first.samples, (lo, hi), (hi - lo) / 2);
    let aligned = if lag == 0 { query.samples.clone() } else { shift(&query.samples, -lag) };
    let sse: Vec<f64> = lib
        .templates
        .iter()
        .map(|t| t.samples.iter().zip(&aligned).map(|(a, b)| (a - b).powi(2)).sum())
        .collect();
    let index = (0..sse.len()).min_by(|&a, &b| sse[a].total_cmp(&sse[b])).expect("non-empty library");
    Ok(LsqMatch { height: lib.heights[index], index, sse, shift: -lag })
}
