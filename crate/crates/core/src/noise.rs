//! Seeded additive white Gaussian noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Mean signal power `sum(x^2)/n`.
pub fn signal_power(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

/// Noise standard deviation giving the requested power signal-to-noise ratio.
pub fn noise_sigma(x: &[f64], snr: f64) -> Result<f64> {
    if !(snr > 0.0) || !snr.is_finite() {
        return Err(Error::validation("snr", "must be positive and finite"));
    }
    Ok((signal_power(x) / snr).sqrt())
}

/// Adds white Gaussian noise of standard deviation `sigma` using a seeded generator.
pub fn add_noise_sigma(x: &[f64], sigma: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma.max(0.0)).expect("finite sigma");
    x.iter().map(|v| v + normal.sample(&mut rng)).collect()
}

/// Adds white Gaussian noise so that signal power / noise power equals `snr`.
pub fn add_awgn(x: &[f64], snr: f64, seed: u64) -> Result<Vec<f64>> {
    let sigma = noise_sigma(x, snr)?;
    Ok(add_noise_sigma(x, sigma, seed))
}
