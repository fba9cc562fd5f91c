//! Material model and closed-form wave propagation formulas.
//!
//! Everything here is a pure function. Permittivity is real valued; loss
//! enters only through the conductivity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in vacuum (m/s).
pub const C0: f64 = 2.997_924_58e8;
/// Vacuum permeability (H/m).
pub const MU0: f64 = 1.256_637_062_12e-6;
/// Vacuum permittivity (F/m), derived from `C0` and `MU0`.
pub const EPS0: f64 = 1.0 / (MU0 * C0 * C0);
/// Impedance of free space (ohm).
pub const ETA0: f64 = MU0 * C0;

/// Electromagnetic properties of a single medium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub name: String,
    pub eps_r: f64,
    /// Conductivity in S/m.
    pub sigma: f64,
    #[serde(default = "one")]
    pub mu_r: f64,
}

fn one() -> f64 {
    1.0
}

impl Material {
    pub fn new(name: impl Into<String>, eps_r: f64, sigma: f64) -> Result<Self> {
        let m = Material { name: name.into(), eps_r, sigma, mu_r: 1.0 };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps_r >= 1.0) || !self.eps_r.is_finite() {
            return Err(Error::validation(format!("{}.eps_r", self.name), "must be >= 1"));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::validation(format!("{}.sigma", self.name), "must be >= 0"));
        }
        if !(self.mu_r >= 1.0) || !self.mu_r.is_finite() {
            return Err(Error::validation(format!("{}.mu_r", self.name), "must be >= 1"));
        }
        Ok(())
    }

    pub fn air() -> Self {
        Material { name: "air".into(), eps_r: 1.0, sigma: 0.0, mu_r: 1.0 }
    }

    pub fn water() -> Self {
        Material { name: "water".into(), eps_r: 81.0, sigma: 1.0, mu_r: 1.0 }
    }

    pub fn grout() -> Self {
        Material { name: "grout".into(), eps_r: 28.0, sigma: 0.01, mu_r: 1.0 }
    }

    pub fn asphalt() -> Self {
        Material { name: "asphalt".into(), eps_r: 6.0, sigma: 0.005, mu_r: 1.0 }
    }

    pub fn base() -> Self {
        Material { name: "base".into(), eps_r: 7.5, sigma: 0.01, mu_r: 1.0 }
    }

    pub fn subgrade() -> Self {
        Material { name: "subgrade".into(), eps_r: 18.0, sigma: 0.2, mu_r: 1.0 }
    }

    /// Same material with the conductivity set to zero.
    pub fn lossless(&self) -> Self {
        Material { sigma: 0.0, ..self.clone() }
    }
}

/// Phase velocity `c/sqrt(eps_r)` in a lossless non-magnetic medium.
pub fn wave_speed(eps_r: f64) -> Result<f64> {
    if !(eps_r >= 1.0) || !eps_r.is_finite() {
        return Err(Error::domain(format!("eps_r must be >= 1, got {eps_r}")));
    }
    Ok(C0 / eps_r.sqrt())
}

/// Attenuation constant, phase constant and phase velocity of a plane wave.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Propagation {
    /// Np/m
    pub alpha: f64,
    /// rad/m
    pub beta: f64,
    /// m/s
    pub v: f64,
}

pub fn propagation_constants(m: &Material, f: f64) -> Result<Propagation> {
    if !(f > 0.0) || !f.is_finite() {
        return Err(Error::domain(format!("frequency must be positive and finite, got {f}")));
    }
    if !m.eps_r.is_finite() || !m.sigma.is_finite() || !m.mu_r.is_finite() {
        return Err(Error::domain("material parameters must be finite"));
    }
    let w = 2.0 * std::f64::consts::PI * f;
    let eps = m.eps_r * EPS0;
    let mu = m.mu_r * MU0;
    let loss = m.sigma / (w * eps);
    let root = (1.0 + loss * loss).sqrt();
    let k = w * (mu * eps / 2.0).sqrt();
    let alpha = k * (root - 1.0).sqrt();
    let beta = k * (root + 1.0).sqrt();
    Ok(Propagation { alpha, beta, v: w / beta })
}

/// Reflection and transmission coefficients of the electric field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fresnel {
    pub r: f64,
    pub t: f64,
}

/// Fresnel coefficients for a wave going from medium 1 into medium 2.
///
/// The oblique form is the perpendicular (TE) polarisation, matching the
/// antenna orientation used throughout. Angles past the critical angle are
/// rejected instead of returning complex coefficients.
pub fn fresnel(eps1: f64, eps2: f64, theta_i: f64) -> Result<Fresnel> {
    if !(eps1 >= 1.0) || !(eps2 >= 1.0) || !eps1.is_finite() || !eps2.is_finite() {
        return Err(Error::domain("permittivities must be >= 1"));
    }
    if !(0.0..std::f64::consts::FRAC_PI_2).contains(&theta_i) {
        return Err(Error::domain(format!("incidence angle {theta_i} outside [0, pi/2)")));
    }
    let n2 = eps2 / eps1;
    if theta_i == 0.0 {
        let r = (eps1.sqrt() - eps2.sqrt()) / (eps1.sqrt() + eps2.sqrt());
        return Ok(Fresnel { r, t: 1.0 + r });
    }
    let s = theta_i.sin();
    let c = theta_i.cos();
    let rad = n2 - s * s;
    if rad < 0.0 {
        return Err(Error::domain(format!(
            "total internal reflection: sin^2(theta) = {} exceeds n^2 = {}",
            s * s,
            n2
        )));
    }
    let q = rad.sqrt();
    Ok(Fresnel { r: (c - q) / (c + q), t: 2.0 * c / (c + q) })
}

/// Complex refractive index mixing of `(volume fraction, eps)` pairs.
pub fn crim_mix(components: &[(f64, f64)]) -> Result<f64> {
    if components.is_empty() {
        return Err(Error::validation("components", "empty"));
    }
    let mut sum_f = 0.0;
    let mut acc = 0.0;
    for &(f, e) in components {
        if !(f >= 0.0) {
            return Err(Error::validation("fraction", format!("negative fraction {f}")));
        }
        if !(e >= 1.0) {
            return Err(Error::validation("eps", format!("eps {e} below 1")));
        }
        sum_f += f;
        acc += f * e.sqrt();
    }
    if (sum_f - 1.0).abs() > 1e-9 {
        return Err(Error::validation("fraction", format!("fractions sum to {sum_f}, expected 1")));
    }
    Ok(acc * acc)
}

/// Three-phase mixing of water, solid matrix and gas for porosity `phi` and
/// water saturation `s_w`.
pub fn crim_three_phase(phi: f64, s_w: f64, eps_w: f64, eps_m: f64, eps_g: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&phi) || !(0.0..=1.0).contains(&s_w) {
        return Err(Error::validation("porosity/saturation", "must lie in [0, 1]"));
    }
    crim_mix(&[(phi * s_w, eps_w), (1.0 - phi, eps_m), (phi * (1.0 - s_w), eps_g)])
}

/// Empirical soil permittivity from volumetric water content.
pub fn annan_moisture(theta_v: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&theta_v) {
        return Err(Error::domain(format!("volumetric water content {theta_v} outside [0, 1]")));
    }
    let t = theta_v;
    Ok(3.03 + 9.3 * t + 146.0 * t * t - 76.6 * t * t * t)
}

/// Source pulse: centre frequency and peak scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RickerSpec {
    pub fc: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
}

impl RickerSpec {
    pub fn new(fc: f64, amplitude: f64) -> Result<Self> {
        let s = RickerSpec { fc, amplitude };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fc > 0.0) || !self.fc.is_finite() {
            return Err(Error::validation("source.fc", "must be positive"));
        }
        if self.amplitude == 0.0 || !self.amplitude.is_finite() {
            return Err(Error::validation("source.amplitude", "must be nonzero and finite"));
        }
        Ok(())
    }

    /// Delay of the wavelet peak, `sqrt(2)/fc`.
    pub fn delay(&self) -> f64 {
        std::f64::consts::SQRT_2 / self.fc
    }
}

/// Ricker wavelet delayed so that it peaks at `sqrt(2)/fc` with value `amplitude`.
pub fn ricker(t: f64, spec: &RickerSpec) -> f64 {
    let zeta = std::f64::consts::PI.powi(2) * spec.fc * spec.fc;
    let u = zeta * (t - spec.delay()).powi(2);
    -spec.amplitude * (2.0 * u - 1.0) * (-u).exp()
}

/// Two-way travel time to a point target at depth `a` seen from horizontal offset `x`.
pub fn point_target_arrival(a: f64, x: f64, v: f64) -> Result<f64> {
    if !(a > 0.0) || !(v > 0.0) {
        return Err(Error::domain("depth and velocity must be positive"));
    }
    Ok(2.0 * (a * a + x * x).sqrt() / v)
}

/// Discrete convolution truncated to the reflectivity length.
pub fn convolve_reflectivity(reflectivity: &[f64], wavelet: &[f64]) -> Result<Vec<f64>> {
    if reflectivity.is_empty() || wavelet.is_empty() {
        return Err(Error::validation("convolution input", "empty sequence"));
    }
    let n = reflectivity.len();
    let mut y = vec![0.0; n];
    for (k, &h) in reflectivity.iter().enumerate() {
        if h == 0.0 {
            continue;
        }
        for (j, &w) in wavelet.iter().enumerate().take(n - k) {
            y[k + j] += h * w;
        }
    }
    Ok(y)
}
