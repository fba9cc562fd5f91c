//! Reflectivity recovery by deconvolution with a known wavelet.
//!
//! The received trace is modelled as `y = E h`, with `E` the lower-triangular
//! Toeplitz matrix built from the wavelet and `h` the reflectivity series.
//! `E` is never formed densely: it is banded with the wavelet length as
//! bandwidth, and so is `EᵀE`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::Trace;

/// Regularization weight tuned for the unnormalized amplitude scale of the
/// reference simulations. It is kept for reproducing that setting; on
/// normalized data the discrepancy principle should be used instead.
pub const REFERENCE_ALPHA: f64 = 5e6;

/// Lower-triangular Toeplitz operator: entry `(i, j)` is `wavelet[i - j]`
/// for `i >= j` and zero otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveletMatrix {
    pub wavelet: Vec<f64>,
    pub n: usize,
}

pub fn build_wavelet_matrix(wavelet: &[f64], n: usize) -> Result<WaveletMatrix> {
    if wavelet.is_empty() {
        return Err(Error::validation("wavelet", "must not be empty"));
    }
    if wavelet.len() > n {
        return Err(Error::validation("n", format!("system size {n} is shorter than the wavelet ({})", wavelet.len())));
    }
    if wavelet.iter().any(|w| !w.is_finite()) {
        return Err(Error::validation("wavelet", "non-finite sample"));
    }
    Ok(WaveletMatrix { wavelet: wavelet.to_vec(), n })
}

impl WaveletMatrix {
    pub fn bandwidth(&self) -> usize {
        self.wavelet.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if i >= j && i - j < self.wavelet.len() {
            self.wavelet[i - j]
        } else {
            0.0
        }
    }

    /// `E h`.
    pub fn apply(&self, h: &[f64]) -> Result<Vec<f64>> {
        self.check_len(h.len())?;
        let w = &self.wavelet;
        Ok((0..self.n)
            .map(|i| {
                let kmax = i.min(w.len() - 1);
                (0..=kmax).map(|k| w[k] * h[i - k]).sum()
            })
            .collect())
    }

    /// `Eᵀ y`.
    pub fn apply_transpose(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check_len(y.len())?;
        let w = &self.wavelet;
        Ok((0..self.n)
            .map(|j| w.iter().zip(&y[j..]).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Upper band of `EᵀE`: element `[i * m + d]` holds `(EᵀE)[i][i + d]`.
    fn gram_band(&self) -> Vec<f64> {
        let (n, m) = (self.n, self.bandwidth());
        let w = &self.wavelet;
        let mut g = vec![0.0; n * m];
        for i in 0..n {
            for d in 0..m.min(n - i) {
                let j = i + d;
                // sum over rows k >= j with both wavelet indices in range
                let kmax = (n - 1).min(i + m - 1);
                let mut s = 0.0;
                for k in j..=kmax {
                    s += w[k - i] * w[k - j];
                }
                g[i * m + d] = s;
            }
        }
        g
    }

    /// Infinity norm of `EᵀE`, an upper bound on its largest eigenvalue.
    pub fn gram_norm(&self) -> f64 {
        let (n, m) = (self.n, self.bandwidth());
        let g = self.gram_band();
        let mut rows = vec![0.0f64; n];
        for i in 0..n {
            for d in 0..m.min(n - i) {
                let v = g[i * m + d].abs();
                rows[i] += v;
                if d > 0 {
                    rows[i + d] += v;
                }
            }
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::Shape(format!("vector of length {len} against a system of size {}", self.n)));
        }
        Ok(())
    }
}

/// Solves `E h = y` exactly by forward substitution.
pub fn deconvolve_naive(y: &[f64], e: &WaveletMatrix) -> Result<Vec<f64>> {
    e.check_len(y.len())?;
    let w = &e.wavelet;
    if w[0] == 0.0 {
        return Err(Error::Singular("first wavelet sample is zero".into()));
    }
    let mut h = vec![0.0; e.n];
    for i in 0..e.n {
        let kmax = i.min(w.len() - 1);
        let mut s = y[i];
        for k in 1..=kmax {
            s -= w[k] * h[i - k];
        }
        h[i] = s / w[0];
    }
    Ok(h)
}

/// Banded Cholesky factor of `EᵀE + αI`.
struct BandCholesky {
    n: usize,
    m: usize,
    /// `l[i * m + d]` is `L[i][i - d]`.
    l: Vec<f64>,
}

impl BandCholesky {
    fn factor(gram: &[f64], n: usize, m: usize, alpha: f64) -> Result<Self> {
        let mut l = vec![0.0; n * m];
        for i in 0..n {
            let dmax = (m - 1).min(i);
            for d in (1..=dmax).rev() {
                let j = i - d;
                let mut s = gram[j * m + d];
                // columns k shared by rows i and j: k in [i - m + 1, j)
                let kmin = (i + 1).saturating_sub(m);
                for k in kmin..j {
                    s -= l[i * m + (i - k)] * l[j * m + (j - k)];
                }
                l[i * m + d] = s / l[j * m];
            }
            let mut s = gram[i * m] + alpha;
            for d in 1..=dmax {
                let v = l[i * m + d];
                s -= v * v;
            }
            if !(s > 0.0) {
                return Err(Error::Singular(format!("normal matrix is not positive definite at row {i}")));
            }
            l[i * m] = s.sqrt();
        }
        Ok(BandCholesky { n, m, l })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, m, l) = (self.n, self.m, &self.l);
        let mut z = vec![0.0; n];
        for i in 0..n {
            let mut s = b[i];
            for d in 1..=(m - 1).min(i) {
                s -= l[i * m + d] * z[i - d];
            }
            z[i] = s / l[i * m];
        }
        let mut h = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = z[i];
            for d in 1..m.min(n - i) {
                s -= l[(i + d) * m + d] * h[i + d];
            }
            h[i] = s / l[i * m];
        }
        h
    }
}

/// Solves `(EᵀE + αI) h = Eᵀy`.
pub fn deconvolve_tikhonov(y: &[f64], e: &WaveletMatrix, alpha: f64) -> Result<Vec<f64>> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::validation("alpha", "must be non-negative and finite"));
    }
    let rhs = e.apply_transpose(y)?;
    let chol = BandCholesky::factor(&e.gram_band(), e.n, e.bandwidth(), alpha)?;
    Ok(chol.solve(&rhs))
}

/// Regularization weight picked by the discrepancy principle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaChoice {
    pub alpha: f64,
    /// Residual norm `‖E h − y‖` at the chosen weight.
    pub residual: f64,
    /// Target residual `noise_rms · √n`.
    pub target: f64,
    pub iterations: usize,
}

/// Weight at which the residual norm matches the expected noise norm,
/// found by bisection on `log α` between `1e-12‖EᵀE‖` and `1e2‖EᵀE‖`.
pub fn discrepancy_alpha(y: &[f64], e: &WaveletMatrix, noise_rms: f64) -> Result<AlphaChoice> {
    if !(noise_rms >= 0.0) {
        return Err(Error::validation("noise_rms", "must be non-negative"));
    }
    e.check_len(y.len())?;
    let target = noise_rms * (e.n as f64).sqrt();
    let gram = e.gram_band();
    let rhs = e.apply_transpose(y)?;
    let norm = e.gram_norm();
    if norm == 0.0 {
        return Err(Error::Singular("wavelet is identically zero".into()));
    }
    let residual = |alpha: f64| -> Result<f64> {
        let h = BandCholesky::factor(&gram, e.n, e.bandwidth(), alpha)?.solve(&rhs);
        let eh = e.apply(&h)?;
        Ok(eh.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
    };
    let (mut lo, mut hi) = ((1e-12 * norm).ln(), (1e2 * norm).ln());
    let r_lo = residual(lo.exp())?;
    if r_lo >= target {
        return Ok(AlphaChoice { alpha: lo.exp(), residual: r_lo, target, iterations: 1 });
    }
    let r_hi = residual(hi.exp())?;
    if r_hi <= target {
        return Ok(AlphaChoice { alpha: hi.exp(), residual: r_hi, target, iterations: 2 });
    }
    let mut best = (hi.exp(), r_hi);
    let mut iterations = 2;
    while hi - lo > 0.01 && iterations < 80 {
        let mid = 0.5 * (lo + hi);
        let r = residual(mid.exp())?;
        iterations += 1;
        best = (mid.exp(), r);
        if (r / target).ln().abs() < 1e-3 {
            break;
        }
        if r < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(AlphaChoice { alpha: best.0, residual: best.1, target, iterations })
}

/// Wavelet cut from a reference echo (a metal-plate shot with the direct
/// wave removed): leading samples below `onset_fraction` of the peak are
/// dropped and the result is limited to `max_len` samples.
///
/// Returns the wavelet, normalized to unit peak, and the index of its first
/// sample in the reference trace.
pub fn wavelet_from_reference(reference: &Trace, onset_fraction: f64, max_len: usize) -> Result<(Vec<f64>, usize)> {
    if !(onset_fraction > 0.0 && onset_fraction < 1.0) {
        return Err(Error::validation("onset_fraction", "must lie in (0, 1)"));
    }
    if max_len == 0 {
        return Err(Error::validation("max_len", "must be positive"));
    }
    let peak = reference.max_abs();
    if peak == 0.0 {
        return Err(Error::Singular("reference echo is identically zero".into()));
    }
    let s = &reference.samples;
    let onset = s.iter().position(|v| v.abs() >= onset_fraction * peak).unwrap_or(0);
    let end = (onset + max_len).min(s.len());
    Ok((s[onset..end].iter().map(|v| v / peak).collect(), onset))
}

/// Two opposite-polarity spikes of a recovered reflectivity series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpikePair {
    pub first: usize,
    pub second: usize,
    pub first_amplitude: f64,
    pub second_amplitude: f64,
}

impl SpikePair {
    pub fn separation(&self) -> usize {
        self.second - self.first
    }
}

/// Strongest extremum of `h` in `[lo, hi)` together with the strongest
/// extremum of opposite sign in the same window, when that one reaches at
/// least `min_ratio` of the first.
pub fn opposite_spike_pair(h: &[f64], lo: usize, hi: usize, min_ratio: f64) -> Option<SpikePair> {
    let hi = hi.min(h.len());
    if lo + 2 >= hi {
        return None;
    }
    let is_extremum = |i: usize| i > 0 && i + 1 < h.len() && (h[i] - h[i - 1]) * (h[i + 1] - h[i]) <= 0.0;
    let main = (lo..hi).filter(|&i| is_extremum(i)).max_by(|&a, &b| h[a].abs().total_cmp(&h[b].abs()))?;
    let sign = h[main].signum();
    let other = (lo..hi)
        .filter(|&i| is_extremum(i) && h[i].signum() == -sign)
        .max_by(|&a, &b| h[a].abs().total_cmp(&h[b].abs()))?;
    if h[other].abs() < min_ratio * h[main].abs() {
        return None;
    }
    let (a, b) = if main < other { (main, other) } else { (other, main) };
    Some(SpikePair { first: a, second: b, first_amplitude: h[a], second_amplitude: h[b] })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(e: &WaveletMatrix) -> Vec<Vec<f64>> {
        (0..e.n).map(|i| (0..e.n).map(|j| e.entry(i, j)).collect()).collect()
    }

    #[test]
    fn unit_wavelet_is_identity() {
        let e = build_wavelet_matrix(&[1.0], 4).unwrap();
        let d = dense(&e);
        for (i, row) in d.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                assert_eq!(*v, if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn two_tap_layout() {
        let e = build_wavelet_matrix(&[1.0, 0.5], 3).unwrap();
        let expect = [[1.0, 0.0, 0.0], [0.5, 1.0, 0.0], [0.0, 0.5, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(e.entry(i, j), expect[i][j]);
            }
        }
    }

    #[test]
    fn impulse_maps_to_shifted_wavelet() {
        let w = [0.3, -1.0, 0.4];
        let e = build_wavelet_matrix(&w, 8).unwrap();
        let mut h = vec![0.0; 8];
        h[2] = 1.0;
        let y = e.apply(&h).unwrap();
        assert_eq!(y, vec![0.0, 0.0, 0.3, -1.0, 0.4, 0.0, 0.0, 0.0]);
        let back = deconvolve_naive(&y, &e).unwrap();
        for (i, v) in back.iter().enumerate() {
            assert!((v - h[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn oversized_wavelet_is_rejected() {
        assert!(build_wavelet_matrix(&[1.0, 2.0, 3.0], 2).is_err());
        assert!(build_wavelet_matrix(&[], 2).is_err());
    }

    #[test]
    fn zero_leading_sample_is_singular() {
        let e = build_wavelet_matrix(&[0.0, 1.0], 4).unwrap();
        assert!(matches!(deconvolve_naive(&[0.0; 4], &e), Err(Error::Singular(_))));
    }

    #[test]
    fn transpose_is_adjoint() {
        let e = build_wavelet_matrix(&[1.0, -0.4, 0.2, 0.1], 9).unwrap();
        let h: Vec<f64> = (0..9).map(|i| (i as f64 * 0.7).sin()).collect();
        let y: Vec<f64> = (0..9).map(|i| (i as f64 * 1.3).cos()).collect();
        let lhs: f64 = e.apply(&h).unwrap().iter().zip(&y).map(|(a, b)| a * b).sum();
        let rhs: f64 = h.iter().zip(e.apply_transpose(&y).unwrap()).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn tikhonov_matches_dense_normal_equations() {
        let w = [1.0, 0.6, -0.3, 0.05];
        let n = 7;
        let e = build_wavelet_matrix(&w, n).unwrap();
        let y: Vec<f64> = (0..n).map(|i| ((i * 3 % 5) as f64) - 2.0).collect();
        let alpha = 0.3;
        let h = deconvolve_tikhonov(&y, &e, alpha).unwrap();
        // (EᵀE + αI) h should equal Eᵀy
        let eh = e.apply(&h).unwrap();
        let mut lhs = e.apply_transpose(&eh).unwrap();
        for (l, v) in lhs.iter_mut().zip(&h) {
            *l += alpha * v;
        }
        let rhs = e.apply_transpose(&y).unwrap();
        for (a, b) in lhs.iter().zip(&rhs) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn tikhonov_without_regularization_is_exact() {
        let w = [1.0, 0.5, -0.2];
        let e = build_wavelet_matrix(&w, 12).unwrap();
        let mut h = vec![0.0; 12];
        h[3] = 1.0;
        h[7] = -0.6;
        let y = e.apply(&h).unwrap();
        let a = deconvolve_naive(&y, &e).unwrap();
        let b = deconvolve_tikhonov(&y, &e, 0.0).unwrap();
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-6);
        }
    }

    #[test]
    fn discrepancy_hits_target() {
        let w: Vec<f64> = (0..6).map(|k| (-(k as f64)).exp() * if k % 2 == 0 { 1.0 } else { -0.5 }).collect();
        let n = 60;
        let e = build_wavelet_matrix(&w, n).unwrap();
        let mut h = vec![0.0; n];
        h[20] = 1.0;
        h[30] = -0.5;
        let clean = e.apply(&h).unwrap();
        let noise = crate::noise::add_noise_sigma(&vec![0.0; n], 0.05, 3);
        let y: Vec<f64> = clean.iter().zip(&noise).map(|(a, b)| a + b).collect();
        let choice = discrepancy_alpha(&y, &e, 0.05).unwrap();
        assert!(choice.alpha > 0.0);
        assert!((choice.residual / choice.target - 1.0).abs() < 0.01, "{choice:?}");
    }

    #[test]
    fn spike_pair_needs_opposite_signs() {
        let mut h = vec![0.0; 40];
        h[10] = 1.0;
        h[15] = -0.7;
        let p = opposite_spike_pair(&h, 0, 40, 0.3).unwrap();
        assert_eq!((p.first, p.second), (10, 15));
        assert_eq!(p.separation(), 5);
        h[15] = 0.7;
        assert!(opposite_spike_pair(&h, 0, 40, 0.3).is_none());
    }

    #[test]
    fn reference_wavelet_is_trimmed() {
        let mut s = vec![0.0; 20];
        s[5] = 0.01;
        s[6] = 0.5;
        s[7] = -2.0;
        s[8] = 1.0;
        let t = Trace::new(s, 1e-11, 0.0, 0.0).unwrap();
        let (w, onset) = wavelet_from_reference(&t, 0.1, 3).unwrap();
        assert_eq!(onset, 6);
        assert_eq!(w, vec![0.25, -1.0, 0.5]);
    }
}
