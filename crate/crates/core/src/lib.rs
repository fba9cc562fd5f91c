//! Ground-penetrating radar toolkit for road structures.
//!
//! * [`physics`]: materials, propagation, Fresnel coefficients, mixing laws, source wavelet
//! * [`fdtd`]: 2D finite-difference time-domain simulation of road scenes
//! * [`sigproc`]: trace editing, filtering and gain
//! * [`detect`]: permittivity/thickness estimation and void detection and sizing
//! * [`equip`]: equipment quality metrics from calibration recordings

pub mod detect;
pub mod equip;
pub mod error;
pub mod fdtd;
pub mod noise;
pub mod physics;
pub mod sigproc;
pub mod trace;

pub use error::{Error, Result};
pub use trace::{Radargram, Trace};
