//! Scene description, defaults and validation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::{Material, RickerSpec, C0};

/// Uniform simulation grid. `width` and `height` describe the physical region;
/// the absorbing layer is added outside of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub width: f64,
    pub height: f64,
    pub spacing: f64,
    pub pml_cells: usize,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.spacing > 0.0) || !self.spacing.is_finite() {
            return Err(Error::validation("grid.spacing_m", "must be positive"));
        }
        for (name, len) in [("grid.width_m", self.width), ("grid.height_m", self.height)] {
            if !(len > 0.0) {
                return Err(Error::validation(name, "must be positive"));
            }
            let k = len / self.spacing;
            if (k - k.round()).abs() > 1e-9 * k.max(1.0) {
                return Err(Error::validation(
                    name,
                    format!("{len} is not an integral multiple of the spacing {}", self.spacing),
                ));
            }
        }
        if self.pml_cells < 8 {
            return Err(Error::validation("grid.pml_cells", "must be at least 8"));
        }
        Ok(())
    }

    /// Number of cells across the physical width.
    pub fn cells_x(&self) -> usize {
        (self.width / self.spacing).round() as usize
    }

    /// Number of cells across the physical height.
    pub fn cells_y(&self) -> usize {
        (self.height / self.spacing).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub material: Material,
    pub thickness: f64,
}

/// Rectangular cavity sitting on top of the deepest layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Void {
    pub x_center: f64,
    pub width: f64,
    pub height: f64,
    pub fill: Material,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveySpec {
    pub tx_x0: f64,
    pub rx_x0: f64,
    pub tx_rx_gap: f64,
    pub elevation: f64,
    pub step: f64,
    pub n_shots: usize,
    pub time_window: f64,
}

impl SurveySpec {
    pub fn tx_x(&self, shot: usize) -> f64 {
        self.tx_x0 + shot as f64 * self.step
    }

    pub fn rx_x(&self, shot: usize) -> f64 {
        self.rx_x0 + shot as f64 * self.step
    }

    /// Trace position: the transmitter/receiver midpoint.
    pub fn midpoint(&self, shot: usize) -> f64 {
        0.5 * (self.tx_x(shot) + self.rx_x(shot))
    }
}

/// Fully validated simulation scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub grid: GridSpec,
    /// Layers from the surface downward.
    pub layers: Vec<Layer>,
    /// Air above the surface, in metres.
    pub air_gap: f64,
    pub void: Option<Void>,
    pub survey: SurveySpec,
    pub source: RickerSpec,
    /// Replace everything at and below the surface by a perfect conductor
    /// (metal-plate calibration shot).
    #[serde(default)]
    pub pec_surface: bool,
}

/// Medium at a point, or a perfect conductor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Medium {
    Dielectric { eps_r: f64, sigma: f64 },
    Pec,
}

impl Scene {
    /// Height of the ground surface above the bottom of the physical region.
    pub fn surface_y(&self) -> f64 {
        self.layers.iter().map(|l| l.thickness).sum()
    }

    /// Height of the top of the deepest layer.
    pub fn last_layer_top_y(&self) -> f64 {
        self.layers.last().map_or(0.0, |l| l.thickness)
    }

    pub fn antenna_y(&self) -> f64 {
        self.surface_y() + self.survey.elevation
    }

    /// Medium at `(x, y)` in physical coordinates (origin bottom-left, y up).
    pub fn medium_at(&self, x: f64, y: f64) -> Medium {
        let surface = self.surface_y();
        if y > surface {
            return Medium::Dielectric { eps_r: 1.0, sigma: 0.0 };
        }
        if self.pec_surface {
            return Medium::Pec;
        }
        if let Some(v) = &self.void {
            let top = self.last_layer_top_y();
            if y <= top && y >= top - v.height && (x - v.x_center).abs() <= 0.5 * v.width {
                return Medium::Dielectric { eps_r: v.fill.eps_r, sigma: v.fill.sigma };
            }
        }
        let mut top = surface;
        for l in &self.layers {
            let bottom = top - l.thickness;
            if y > bottom {
                return Medium::Dielectric { eps_r: l.material.eps_r, sigma: l.material.sigma };
            }
            top = bottom;
        }
        let m = &self.layers.last().expect("scene has layers").material;
        Medium::Dielectric { eps_r: m.eps_r, sigma: m.sigma }
    }

    /// Area-weighted medium of the `d`-by-`d` cell centred on `(x, y)`.
    ///
    /// A node lying inside the plate is a perfect conductor; the part of a
    /// straddling cell below the plate counts as air.
    pub fn cell_average(&self, x: f64, y: f64, d: f64) -> Medium {
        let surface = self.surface_y();
        if self.pec_surface && y <= surface {
            return Medium::Pec;
        }
        let (lo, hi) = (y - 0.5 * d, y + 0.5 * d);
        let overlap = |a: f64, b: f64| ((hi.min(b) - lo.max(a)) / d).max(0.0);
        let mut eps = overlap(surface, f64::INFINITY);
        let mut sigma = 0.0;
        if self.pec_surface {
            eps += overlap(f64::NEG_INFINITY, surface);
            return Medium::Dielectric { eps_r: eps, sigma };
        }
        let mut top = surface;
        let n = self.layers.len();
        for (k, l) in self.layers.iter().enumerate() {
            let bottom = if k + 1 == n { f64::NEG_INFINITY } else { top - l.thickness };
            let f = overlap(bottom, top);
            eps += f * l.material.eps_r;
            sigma += f * l.material.sigma;
            top -= l.thickness;
        }
        if let Some(v) = &self.void {
            let vt = self.last_layer_top_y();
            let fy = overlap(vt - v.height, vt);
            let (xl, xr) = (v.x_center - 0.5 * v.width, v.x_center + 0.5 * v.width);
            let fx = ((xr.min(x + 0.5 * d) - xl.max(x - 0.5 * d)) / d).max(0.0);
            let f = fx * fy;
            if f > 0.0 {
                let m = &self.layers[n - 1].material;
                eps += f * (v.fill.eps_r - m.eps_r);
                sigma += f * (v.fill.sigma - m.sigma);
            }
        }
        Medium::Dielectric { eps_r: eps, sigma }
    }

    /// Largest relative permittivity anywhere in the scene.
    pub fn eps_max(&self) -> f64 {
        let mut e = self.layers.iter().fold(1.0f64, |m, l| m.max(l.material.eps_r));
        if let Some(v) = &self.void {
            e = e.max(v.fill.eps_r);
        }
        e
    }

    /// Scene with every layer and the void replaced by air: the direct-wave reference.
    pub fn free_space(&self) -> Scene {
        let mut s = self.clone();
        for l in &mut s.layers {
            l.material = Material::air();
        }
        s.void = None;
        s.pec_surface = false;
        s
    }

    /// Metal plate lying on the surface.
    pub fn metal_plate(&self) -> Scene {
        let mut s = self.clone();
        s.void = None;
        s.pec_surface = true;
        s
    }

    pub fn without_void(&self) -> Scene {
        Scene { void: None, ..self.clone() }
    }

    /// Same scene with every conductivity set to zero.
    pub fn lossless(&self) -> Scene {
        let mut s = self.clone();
        for l in &mut s.layers {
            l.material = l.material.lossless();
        }
        if let Some(v) = &mut s.void {
            v.fill = v.fill.lossless();
        }
        s
    }

    pub fn with_void(&self, void: Option<Void>) -> Scene {
        Scene { void, ..self.clone() }
    }

    /// Survey collapsed to a single shot whose midpoint sits at `x`.
    pub fn single_shot_at(&self, x: f64) -> Scene {
        let mut s = self.clone();
        let half = 0.5 * s.survey.tx_rx_gap;
        s.survey.tx_x0 = x - half;
        s.survey.rx_x0 = x + half;
        s.survey.n_shots = 1;
        s
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.source.validate()?;
        if self.layers.is_empty() {
            return Err(Error::validation("layers", "at least one layer is required"));
        }
        for (i, l) in self.layers.iter().enumerate() {
            l.material.validate().map_err(|e| match e {
                Error::Validation { field, reason } => {
                    Error::validation(format!("layers[{i}].{field}"), reason)
                }
                other => other,
            })?;
            if !(l.thickness > 0.0) {
                return Err(Error::validation(
                    format!("layers[{i}].thickness_m"),
                    format!("layer '{}' must have positive thickness", l.material.name),
                ));
            }
        }
        if !(self.air_gap > 0.0) {
            return Err(Error::validation("air_gap_m", "must be positive"));
        }
        let total = self.air_gap + self.surface_y();
        if (total - self.grid.height).abs() > 1e-9 * self.grid.height.max(1.0) {
            return Err(Error::validation(
                "grid.height_m",
                format!("air gap plus layer thicknesses is {total} m, grid height is {} m", self.grid.height),
            ));
        }
        if let Some(v) = &self.void {
            v.fill.validate().map_err(|_| Error::validation("void.fill", "invalid material"))?;
            if self.layers.len() < 2 {
                return Err(Error::validation("void", "needs a layer above the deepest one"));
            }
            if v.height < self.grid.spacing * (1.0 - 1e-9) {
                return Err(Error::validation("void.height_m", "smaller than the grid spacing"));
            }
            if v.height > self.last_layer_top_y() {
                return Err(Error::validation("void.height_m", "extends below the deepest layer"));
            }
            if !(v.width > 0.0) {
                return Err(Error::validation("void.width_m", "must be positive"));
            }
            // A void may run out through the lateral edges (a laterally
            // invariant cavity), but its centre must be inside the grid.
            if v.x_center < 0.0 || v.x_center > self.grid.width {
                return Err(Error::validation("void.x_center_m", "void centre outside the grid"));
            }
        }
        let s = &self.survey;
        if !(s.tx_rx_gap > 0.0) {
            return Err(Error::validation("survey.gap_m", "must be positive"));
        }
        if ((s.rx_x0 - s.tx_x0) - s.tx_rx_gap).abs() > 1e-9 {
            return Err(Error::validation("survey.rx_x0", "inconsistent with tx_x0 + gap"));
        }
        if s.n_shots == 0 {
            return Err(Error::validation("survey.n_shots", "must be at least 1"));
        }
        if s.n_shots > 1 && !(s.step > 0.0) {
            return Err(Error::validation("survey.step_m", "must be positive"));
        }
        if !(s.time_window > 0.0) {
            return Err(Error::validation("survey.time_window_ns", "must be positive"));
        }
        if !(s.elevation > 0.0) || self.antenna_y() >= self.grid.height {
            return Err(Error::validation("survey.elevation_m", "antenna must sit in the air region"));
        }
        let last = s.n_shots - 1;
        for x in [s.tx_x(0), s.rx_x(0), s.tx_x(last), s.rx_x(last)] {
            if x < 0.0 || x > self.grid.width {
                return Err(Error::validation("survey.tx_x0_m", format!("shot position {x} m outside the grid")));
            }
        }
        let limit = max_spacing(self.source.fc, self.eps_max());
        if self.grid.spacing > limit * (1.0 + 1e-9) {
            return Err(Error::validation(
                "grid.spacing_m",
                format!("{} m is coarser than a fifth of the shortest wavelength ({limit:.4e} m)", self.grid.spacing),
            ));
        }
        Ok(())
    }
}

/// Highest frequency taken into account when sizing the grid, relative to the
/// centre frequency. The Ricker spectrum at twice the centre frequency is
/// down to about 20 % of its peak.
pub const F_MAX_FACTOR: f64 = 2.0;

/// Coarsest spacing accepted by validation: a fifth of the shortest wavelength.
pub fn max_spacing(fc: f64, eps_max: f64) -> f64 {
    C0 / (F_MAX_FACTOR * fc * eps_max.sqrt()) / 5.0
}

/// A tenth of the shortest wavelength.
pub fn estimate_grid_spacing(f_max: f64, eps_max: f64) -> f64 {
    C0 / (10.0 * f_max * eps_max.sqrt())
}

/// Stable time step for the 2D update.
pub fn courant_dt(grid: &GridSpec) -> f64 {
    0.99 * grid.spacing / (C0 * std::f64::consts::SQRT_2)
}

/// Two-way travel time through all layers, without margin.
pub fn two_way_time(layers: &[Layer]) -> f64 {
    layers.iter().map(|l| 2.0 * l.thickness * l.material.eps_r.sqrt() / C0).sum()
}

/// Two-way time plus 10 %, rounded up to a whole nanosecond.
pub fn recommended_time_window(layers: &[Layer]) -> f64 {
    let t = two_way_time(layers) * 1.1;
    (t * 1e9 - 1e-9).ceil().max(0.0) * 1e-9
}

// ---------------------------------------------------------------------------
// JSON description

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub width_m: f64,
    pub height_m: f64,
    #[serde(default)]
    pub spacing_m: Option<f64>,
    #[serde(default)]
    pub pml_cells: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerConfig {
    pub name: String,
    #[serde(default)]
    pub eps_r: Option<f64>,
    #[serde(default)]
    pub sigma: Option<f64>,
    pub thickness_m: f64,
}

/// A fill is either a material name known to the library or explicit parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FillConfig {
    Named(String),
    Explicit { name: String, eps_r: f64, #[serde(default)] sigma: f64 },
}

impl FillConfig {
    pub fn material(&self) -> Result<Material> {
        match self {
            FillConfig::Named(n) => match n.as_str() {
                "air" => Ok(Material::air()),
                "water" => Ok(Material::water()),
                "grout" => Ok(Material::grout()),
                other => Err(Error::validation("void.fill", format!("unknown material '{other}'"))),
            },
            FillConfig::Explicit { name, eps_r, sigma } => Material::new(name.clone(), *eps_r, *sigma)
                .map_err(|e| Error::validation("void.fill", e.to_string())),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VoidConfig {
    pub x_center_m: f64,
    pub width_m: f64,
    pub height_m: f64,
    pub fill: FillConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurveyConfig {
    pub tx_x0_m: f64,
    pub gap_m: f64,
    pub elevation_m: f64,
    pub step_m: f64,
    pub n_shots: usize,
    #[serde(default)]
    pub time_window_ns: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub fc_hz: f64,
    #[serde(default = "unit")]
    pub amplitude: f64,
}

fn unit() -> f64 {
    1.0
}

/// Scene description as read from JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub grid: GridConfig,
    pub layers: Vec<LayerConfig>,
    #[serde(default)]
    pub void: Option<VoidConfig>,
    pub survey: SurveyConfig,
    pub source: SourceConfig,
    #[serde(default)]
    pub pec_surface: bool,
}

impl SceneConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::validation("scene", e.to_string()))
    }

    /// The reference road: 2.7 m long section, asphalt over a semi-rigid base
    /// over subgrade, 800 MHz antenna pair 4 cm apart, 90 shots every 2 cm.
    ///
    /// The antennas sit 0.5 m above the surface. The height of the model is
    /// 1.62 m (1.0 m of road plus 0.62 m of air) so that it is a whole number
    /// of cells for 1, 2, 3 and 5 mm grids.
    pub fn road_default() -> Self {
        SceneConfig {
            grid: GridConfig { width_m: 2.7, height_m: 1.62, spacing_m: Some(0.003), pml_cells: Some(10) },
            layers: vec![
                LayerConfig { name: "asphalt".into(), eps_r: Some(6.0), sigma: Some(0.005), thickness_m: 0.15 },
                LayerConfig { name: "base".into(), eps_r: Some(7.5), sigma: Some(0.01), thickness_m: 0.35 },
                LayerConfig { name: "subgrade".into(), eps_r: Some(18.0), sigma: Some(0.2), thickness_m: 0.5 },
            ],
            void: None,
            survey: SurveyConfig {
                tx_x0_m: 0.45,
                gap_m: 0.04,
                elevation_m: 0.5,
                step_m: 0.02,
                n_shots: 90,
                time_window_ns: Some(25.0),
            },
            source: SourceConfig { fc_hz: 8e8, amplitude: 1.0 },
            pec_surface: false,
        }
    }
}

/// Default antenna elevation above the surface.
pub const DEFAULT_ELEVATION: f64 = 0.5;
/// Default absorbing layer thickness in cells.
pub const DEFAULT_PML_CELLS: usize = 10;
/// Preferred grid spacing when it resolves the scene.
pub const PREFERRED_SPACING: f64 = 0.003;

fn divides(len: f64, d: f64) -> bool {
    let k = len / d;
    (k - k.round()).abs() <= 1e-9 * k.max(1.0)
}

/// Spacing used when the description leaves it out: 3 mm when that resolves
/// the scene, otherwise the largest round value below a tenth of the shortest
/// wavelength that divides the grid.
pub fn default_spacing(width: f64, height: f64, fc: f64, eps_max: f64) -> Result<f64> {
    if PREFERRED_SPACING <= max_spacing(fc, eps_max) && divides(width, PREFERRED_SPACING) && divides(height, PREFERRED_SPACING) {
        return Ok(PREFERRED_SPACING);
    }
    let target = estimate_grid_spacing(F_MAX_FACTOR * fc, eps_max);
    const CANDIDATES_MM: [f64; 14] = [10.0, 8.0, 6.0, 5.0, 4.0, 3.0, 2.5, 2.0, 1.5, 1.0, 0.5, 0.25, 0.2, 0.1];
    CANDIDATES_MM
        .iter()
        .map(|mm| mm * 1e-3)
        .find(|&d| d <= target && divides(width, d) && divides(height, d))
        .ok_or_else(|| Error::validation("grid.spacing_m", "no default spacing divides the grid; give one explicitly"))
}

fn layer_material(i: usize, l: &LayerConfig) -> Result<Material> {
    let eps = l.eps_r.ok_or_else(|| {
        Error::validation(format!("layers[{i}].eps_r"), format!("missing material entry for layer '{}'", l.name))
    })?;
    let sigma = l.sigma.ok_or_else(|| {
        Error::validation(format!("layers[{i}].sigma"), format!("missing material entry for layer '{}'", l.name))
    })?;
    Material::new(l.name.clone(), eps, sigma)
        .map_err(|e| Error::validation(format!("layers[{i}] ({})", l.name), e.to_string()))
}

/// Turns a description into a validated scene, filling in defaults.
pub fn build_scene(cfg: &SceneConfig) -> Result<Scene> {
    if cfg.layers.is_empty() {
        return Err(Error::validation("layers", "at least one layer is required"));
    }
    let layers = cfg
        .layers
        .iter()
        .enumerate()
        .map(|(i, l)| Ok(Layer { material: layer_material(i, l)?, thickness: l.thickness_m }))
        .collect::<Result<Vec<_>>>()?;
    let void = cfg
        .void
        .as_ref()
        .map(|v| -> Result<Void> {
            Ok(Void { x_center: v.x_center_m, width: v.width_m, height: v.height_m, fill: v.fill.material()? })
        })
        .transpose()?;
    let source = RickerSpec::new(cfg.source.fc_hz, cfg.source.amplitude)?;
    let thickness: f64 = layers.iter().map(|l| l.thickness).sum();
    let air_gap = cfg.grid.height_m - thickness;
    let mut eps_max = layers.iter().fold(1.0f64, |m, l| m.max(l.material.eps_r));
    if let Some(v) = &void {
        eps_max = eps_max.max(v.fill.eps_r);
    }
    let spacing = match cfg.grid.spacing_m {
        Some(s) => s,
        None => default_spacing(cfg.grid.width_m, cfg.grid.height_m, source.fc, eps_max)?,
    };
    let time_window = match cfg.survey.time_window_ns {
        Some(t) => t * 1e-9,
        None => recommended_time_window(&layers),
    };
    let s = &cfg.survey;
    let scene = Scene {
        grid: GridSpec {
            width: cfg.grid.width_m,
            height: cfg.grid.height_m,
            spacing,
            pml_cells: cfg.grid.pml_cells.unwrap_or(DEFAULT_PML_CELLS),
        },
        layers,
        air_gap,
        void,
        survey: SurveySpec {
            tx_x0: s.tx_x0_m,
            rx_x0: s.tx_x0_m + s.gap_m,
            tx_rx_gap: s.gap_m,
            elevation: s.elevation_m,
            step: s.step_m,
            n_shots: s.n_shots,
            time_window,
        },
        source,
        pec_surface: cfg.pec_surface,
    };
    scene.validate()?;
    Ok(scene)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_estimates() {
        assert!((estimate_grid_spacing(3e9, 81.0) - 1.110_342_4e-3).abs() < 1e-9);
        assert!((estimate_grid_spacing(1e9, 1.0) - 0.029_979_245_8).abs() < 1e-12);
        assert!((estimate_grid_spacing(C0 / 10.0, 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn courant_values() {
        let g = |d| GridSpec { width: 1.0, height: 1.0, spacing: d, pml_cells: 10 };
        assert!((courant_dt(&g(0.003)) - 7.004e-12).abs() < 1e-14);
        assert!((courant_dt(&g(0.005)) - 1.1674e-11).abs() < 1e-14);
        assert!((courant_dt(&g(0.01)) - 2.0 * courant_dt(&g(0.005))).abs() < 1e-25);
    }

    #[test]
    fn time_window_for_reference_road() {
        let scene = build_scene(&SceneConfig::road_default()).unwrap();
        let raw = two_way_time(&scene.layers);
        // The published figure uses c = 3e8 m/s; the exact constant lands 0.07 % higher.
        assert!((raw * 1e9 - 22.98).abs() / 22.98 < 1e-3, "{}", raw * 1e9);
        assert!((raw * C0 / 3e8 * 1e9 - 22.98).abs() < 0.005);
        assert!((recommended_time_window(&scene.layers) - 26e-9).abs() < 1e-18);
        let one = [Layer { material: Material::asphalt(), thickness: 0.15 }];
        assert!((two_way_time(&one) - 2.0 * 0.15 * 6f64.sqrt() / C0).abs() < 1e-20);
        let zero = [Layer { material: Material::asphalt(), thickness: 0.0 }];
        assert_eq!(recommended_time_window(&zero), 0.0);
    }

    #[test]
    fn reference_road_geometry() {
        let s = build_scene(&SceneConfig::road_default()).unwrap();
        let t: Vec<f64> = s.layers.iter().map(|l| l.thickness).collect();
        assert_eq!(t, vec![0.15, 0.35, 0.5]);
        assert!((s.air_gap - 0.62).abs() < 1e-12);
        assert_eq!(s.grid.pml_cells, 10);
        assert_eq!(s.survey.n_shots, 90);
        assert!((s.antenna_y() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn void_thinner_than_a_cell_is_rejected() {
        let mut cfg = SceneConfig::road_default();
        cfg.void = Some(VoidConfig { x_center_m: 1.35, width_m: 0.5, height_m: 0.002, fill: FillConfig::Named("air".into()) });
        let err = build_scene(&cfg).unwrap_err();
        assert!(matches!(err, Error::Validation { ref field, .. } if field == "void.height_m"), "{err}");
    }

    #[test]
    fn missing_material_names_the_layer() {
        let mut cfg = SceneConfig::road_default();
        cfg.layers[1].eps_r = None;
        let err = build_scene(&cfg).unwrap_err().to_string();
        assert!(err.contains("base"), "{err}");
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let mut cfg = SceneConfig::road_default();
        cfg.grid.spacing_m = Some(0.018);
        assert!(build_scene(&cfg).is_err());
    }

    #[test]
    fn default_spacing_prefers_three_millimetres() {
        let mut cfg = SceneConfig::road_default();
        cfg.grid.spacing_m = None;
        assert_eq!(build_scene(&cfg).unwrap().grid.spacing, 0.003);
        cfg.source.fc_hz = 1.2e9;
        cfg.void = Some(VoidConfig { x_center_m: 1.35, width_m: 0.5, height_m: 0.1, fill: FillConfig::Named("water".into()) });
        let s = build_scene(&cfg).unwrap();
        assert!(s.grid.spacing < 0.003);
        assert!(s.grid.spacing <= estimate_grid_spacing(2.4e9, 81.0));
    }

    #[test]
    fn medium_lookup() {
        let mut cfg = SceneConfig::road_default();
        cfg.void = Some(VoidConfig { x_center_m: 1.35, width_m: 0.5, height_m: 0.1, fill: FillConfig::Named("water".into()) });
        let s = build_scene(&cfg).unwrap();
        let eps = |x, y| match s.medium_at(x, y) {
            Medium::Dielectric { eps_r, .. } => eps_r,
            Medium::Pec => f64::INFINITY,
        };
        assert_eq!(eps(1.0, 1.2), 1.0);
        assert_eq!(eps(1.0, 0.95), 6.0);
        assert_eq!(eps(1.0, 0.6), 7.5);
        assert_eq!(eps(1.0, 0.45), 18.0);
        assert_eq!(eps(1.35, 0.45), 81.0);
        assert_eq!(eps(1.35, 0.35), 18.0);
        assert_eq!(s.metal_plate().medium_at(1.0, 0.9), Medium::Pec);
    }

    #[test]
    fn cell_average_weights_by_area() {
        let mut cfg = SceneConfig::road_default();
        cfg.void = Some(VoidConfig { x_center_m: 1.35, width_m: 0.5, height_m: 0.1, fill: FillConfig::Named("air".into()) });
        let s = build_scene(&cfg).unwrap();
        let eps = |m: Medium| match m {
            Medium::Dielectric { eps_r, .. } => eps_r,
            Medium::Pec => f64::INFINITY,
        };
        let d = 0.004;
        // Node on the surface: half air, half asphalt.
        assert!((eps(s.cell_average(0.5, 1.0, d)) - 3.5).abs() < 1e-12);
        // A quarter of the cell inside the base.
        assert!((eps(s.cell_average(0.5, 0.85 + 0.001, d)) - (0.75 * 6.0 + 0.25 * 7.5)).abs() < 1e-12);
        // Void corner: half base above, a quarter air and a quarter subgrade below.
        assert!((eps(s.cell_average(1.6, 0.5, d)) - (0.25 + 0.5 * 7.5 + 0.25 * 18.0)).abs() < 1e-12);
        assert!((eps(s.cell_average(0.5, 0.2, d)) - 18.0).abs() < 1e-12);
        assert_eq!(s.metal_plate().cell_average(0.5, 1.0, d), Medium::Pec);
        assert!((eps(s.metal_plate().cell_average(0.5, 1.001, d)) - 1.0).abs() < 1e-12);
    }
}
