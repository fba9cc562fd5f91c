//! Synthetic A-scans and B-scans of layered road scenes.
//!
//! Recorded traces are the receiver electric field with the sign flipped, so
//! that the direct wave peaks negative and a reflection off a denser medium
//! (air onto asphalt, or a metal plate) comes back positive.

mod scene;
mod solver;

use rayon::prelude::*;

pub use scene::*;
pub use solver::Simulation;

use crate::error::Result;
use crate::trace::{Radargram, Trace};

/// Sign applied to the raw receiver field.
pub const POLARITY: f64 = -1.0;

/// Number of samples recorded for a scene.
pub fn n_samples(scene: &Scene) -> usize {
    let dt = courant_dt(&scene.grid);
    (scene.survey.time_window / dt - 1e-9).ceil() as usize
}

/// Runs one shot and returns the received trace.
pub fn simulate_ascan(scene: &Scene, shot_index: usize) -> Result<Trace> {
    let mut sim = Simulation::new(scene, shot_index)?;
    let n = n_samples(scene).max(2);
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        samples.push(POLARITY * sim.step()?);
    }
    Trace::new(samples, sim.dt(), 0.0, scene.survey.midpoint(shot_index))
}

/// Runs every shot of the survey. Shots are independent and run in parallel;
/// the result does not depend on the number of threads.
pub fn simulate_bscan(scene: &Scene) -> Result<Radargram> {
    scene.validate()?;
    let traces = (0..scene.survey.n_shots)
        .into_par_iter()
        .map(|k| simulate_ascan(scene, k))
        .collect::<Result<Vec<_>>>()?;
    Radargram::new(traces, scene.survey.step.max(f64::MIN_POSITIVE), scene.survey.midpoint(0))
}
