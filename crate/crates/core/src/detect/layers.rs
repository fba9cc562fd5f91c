//! Layer thickness and permittivity from travel times and reflection amplitudes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::C0;

/// Thickness of a layer from the two-way time between its top and bottom reflections.
pub fn layer_thickness(delta_t: f64, eps_r: f64) -> Result<f64> {
    if !(delta_t > 0.0) || !(eps_r >= 1.0) {
        return Err(Error::domain("layer_thickness needs delta_t > 0 and eps_r >= 1"));
    }
    Ok(C0 * delta_t / (2.0 * eps_r.sqrt()))
}

/// Thinnest layer whose two reflections do not overlap for a pulse of period `period`.
pub fn resolution_limit(period: f64, eps_r: f64) -> Result<f64> {
    if !(period >= 0.0) || !(eps_r >= 1.0) {
        return Err(Error::domain("resolution_limit needs period >= 0 and eps_r >= 1"));
    }
    Ok(C0 * period / (2.0 * eps_r.sqrt()))
}

/// Permittivity from a two-way time and a cored thickness.
pub fn eps_from_core(delta_t: f64, delta_d: f64) -> Result<f64> {
    if !(delta_t > 0.0) || !(delta_d > 0.0) {
        return Err(Error::domain("eps_from_core needs positive time and thickness"));
    }
    Ok((C0 * delta_t / (2.0 * delta_d)).powi(2))
}

/// Permittivity of the top layer from its surface reflection `a0` and the
/// metal-plate reflection `ap` recorded with the same antenna height.
pub fn eps_surface(a0: f64, ap: f64) -> Result<f64> {
    if !(ap > 0.0) {
        return Err(Error::domain("plate amplitude must be positive"));
    }
    if !(a0.abs() < ap) {
        return Err(Error::domain(format!("surface amplitude {a0} is not smaller than the plate amplitude {ap}")));
    }
    Ok(((ap + a0) / (ap - a0)).powi(2))
}

/// Reflection coefficient between two layers seen from above.
fn gamma(eps_upper: f64, eps_lower: f64) -> f64 {
    let (a, b) = (eps_upper.sqrt(), eps_lower.sqrt());
    (a - b) / (a + b)
}

/// Permittivity of layer `n + 1` given the amplitudes `A0..A_n` of the
/// surface and the first `n` interface reflections, the plate amplitude and
/// the permittivities of layers `1..=n` (`eps_chain`).
///
/// The interface reflection is corrected for two-way transmission through
/// the surface and for the reflections of the intermediate interfaces.
pub fn eps_layer_n(amplitudes: &[f64], ap: f64, eps_chain: &[f64]) -> Result<f64> {
    let n = amplitudes.len();
    if n < 2 {
        return Err(Error::validation("amplitudes", "need the surface and at least one interface amplitude"));
    }
    if eps_chain.len() != n - 1 {
        return Err(Error::Shape(format!("{} amplitudes need {} layer permittivities, got {}", n, n - 1, eps_chain.len())));
    }
    if !(ap > 0.0) {
        return Err(Error::domain("plate amplitude must be positive"));
    }
    if let Some(a) = amplitudes.iter().find(|a| !(a.abs() < ap)) {
        return Err(Error::domain(format!("amplitude {a} is not smaller than the plate amplitude {ap}")));
    }
    if eps_chain.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::domain("layer permittivities must be positive"));
    }
    let r: Vec<f64> = amplitudes.iter().map(|a| a / ap).collect();
    let mut middle = 0.0;
    for i in 1..n - 1 {
        middle += gamma(eps_chain[i - 1], eps_chain[i]) * r[i];
    }
    let base = 1.0 - r[0] * r[0];
    let num = base + middle + r[n - 1];
    let den = base - middle - r[n - 1];
    if !(den > 0.0) {
        return Err(Error::Singular(format!("amplitude set is inconsistent (denominator {den:.3e})")));
    }
    Ok(eps_chain[n - 2] * (num / den).powi(2))
}

/// Permittivities of every layer from the surface and interface amplitudes.
pub fn eps_profile(amplitudes: &[f64], ap: f64) -> Result<Vec<f64>> {
    let first = *amplitudes.first().ok_or_else(|| Error::validation("amplitudes", "empty"))?;
    let mut eps = vec![eps_surface(first, ap)?];
    for k in 2..=amplitudes.len() {
        let next = eps_layer_n(&amplitudes[..k], ap, &eps)?;
        eps.push(next);
    }
    Ok(eps)
}

/// Permittivity and thickness of the top layer from a common-midpoint pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CmpEstimate {
    pub eps_r: f64,
    pub thickness: f64,
}

/// Common-midpoint estimate from two antenna separations `x1`, `x2` (m) and
/// the corresponding two-way times `t1`, `t2` (s) of the same reflector.
pub fn cmp_estimate(x1: f64, t1: f64, x2: f64, t2: f64) -> Result<CmpEstimate> {
    if [x1, t1, x2, t2].iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::domain("offsets and times must be positive"));
    }
    let dx2 = x1 * x1 - x2 * x2;
    let dt2 = t1 * t1 - t2 * t2;
    if dx2 == 0.0 {
        return Err(Error::domain("the two offsets coincide"));
    }
    if dt2 == 0.0 {
        return Err(Error::domain("the two times coincide"));
    }
    let eps_r = C0 * C0 * dt2 / dx2;
    if !(eps_r > 0.0) {
        return Err(Error::domain("later arrival must belong to the larger offset"));
    }
    let radicand = (x2 * x2 * t1 * t1 - x1 * x1 * t2 * t2) / (4.0 * (t2 * t2 - t1 * t1));
    if !(radicand >= 0.0) {
        return Err(Error::domain(format!("negative radicand {radicand:.3e}")));
    }
    Ok(CmpEstimate { eps_r, thickness: radicand.sqrt() })
}
