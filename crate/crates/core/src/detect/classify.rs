//! Void fill classification from the permittivity seen below the void top.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FillClass {
    Air,
    Water,
    Grout,
    Unknown,
}

/// Permittivity bands separating the fill classes.
///
/// Conductive losses in the layers above make the apparent permittivity of a
/// water or grout fill far lower than the true one, so the bands must match
/// the loss regime of the surveyed road and should be checked against cores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FillThresholds {
    /// Estimates strictly below this are air.
    pub air_max: f64,
    pub grout_min: f64,
    pub grout_max: f64,
    /// Estimates strictly above this are water.
    pub water_min: f64,
}

impl Default for FillThresholds {
    /// Bands for a road with a conductive base and subgrade.
    fn default() -> Self {
        FillThresholds { air_max: 3.0, grout_min: 9.0, grout_max: 17.0, water_min: 17.0 }
    }
}

impl FillThresholds {
    /// Bands for a nearly lossless pavement, where water reads 50 or more.
    pub fn low_loss() -> Self {
        FillThresholds { air_max: 3.0, grout_min: 15.0, grout_max: 35.0, water_min: 35.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let v = [self.air_max, self.grout_min, self.grout_max, self.water_min];
        if v.iter().any(|x| !x.is_finite() || *x <= 0.0) {
            return Err(Error::validation("thresholds", "must be positive and finite"));
        }
        if !(self.air_max <= self.grout_min && self.grout_min <= self.grout_max && self.grout_max <= self.water_min) {
            return Err(Error::validation("thresholds", "bands must be ordered air <= grout <= water"));
        }
        Ok(())
    }
}

pub fn classify_void_fill(eps_estimate: f64, thresholds: &FillThresholds) -> Result<FillClass> {
    if !(eps_estimate > 0.0) || !eps_estimate.is_finite() {
        return Err(Error::domain("permittivity estimate must be positive"));
    }
    thresholds.validate()?;
    let t = thresholds;
    Ok(if eps_estimate < t.air_max {
        FillClass::Air
    } else if eps_estimate > t.water_min {
        FillClass::Water
    } else if eps_estimate >= t.grout_min && eps_estimate <= t.grout_max {
        FillClass::Grout
    } else {
        FillClass::Unknown
    })
}
