//! Length-N discrete Fourier transforms and circular convolution.
//!
//! Convention: the forward transform is unnormalized,
//! `X[k] = Σ_t x[t] e^{-2iπkt/N}`, and the inverse carries the `1/N` factor.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{domain, numeric, Result};

/// Relative tolerance of the Hermitian-symmetry check in [`idft`].
pub const HERMITIAN_TOL: f64 = 1e-10;

/// DFT coefficients of a length-N array.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Largest violation of `c[k] = conj(c[N-k])`, relative to the largest
    /// coefficient magnitude.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.coeffs.len();
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let worst = (0..n)
            .map(|k| (self.coeffs[k] - self.coeffs[(n - k) % n].conj()).norm())
            .fold(0.0, f64::max);
        worst / scale
    }

    /// Pointwise product, the spectral form of circular convolution.
    pub fn mul(&self, other: &Spectrum) -> Result<Spectrum> {
        if self.len() != other.len() {
            return domain(format!(
                "spectrum length mismatch: {} vs {}",
                self.len(),
                other.len()
            ));
        }
        Ok(Spectrum {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a * b)
                .collect(),
        })
    }
}

/// Cached forward and inverse plans for one transform length.
#[derive(Clone)]
pub struct FftEngine {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FftEngine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftEngine").field("n", &self.n).finish()
    }
}

impl FftEngine {
    pub fn new(n: usize) -> Result<Self> {
        check_len(n)?;
        let mut planner = FftPlanner::new();
        Ok(Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn forward_real(&self, x: &[f64]) -> Result<Spectrum> {
        if x.len() != self.n {
            return domain(format!("input length {} != {}", x.len(), self.n));
        }
        let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        Ok(Spectrum { coeffs: buf })
    }

    /// Inverse transform keeping the real part. No symmetry check: callers
    /// guarantee Hermitian input (products of real-signal spectra).
    pub fn inverse_real_unchecked(&self, mut coeffs: Vec<Complex64>) -> Result<Vec<f64>> {
        if coeffs.len() != self.n {
            return domain(format!("spectrum length {} != {}", coeffs.len(), self.n));
        }
        self.inverse.process(&mut coeffs);
        let scale = 1.0 / self.n as f64;
        Ok(coeffs.into_iter().map(|c| c.re * scale).collect())
    }

    pub fn inverse_real(&self, s: &Spectrum) -> Result<Vec<f64>> {
        let defect = s.hermitian_defect();
        if defect > HERMITIAN_TOL {
            return numeric(format!(
                "spectrum is not Hermitian (relative defect {defect:.3e})"
            ));
        }
        self.inverse_real_unchecked(s.coeffs.clone())
    }
}

fn check_len(n: usize) -> Result<()> {
    if n == 0 || !n.is_power_of_two() {
        return domain(format!("transform length {n} is not a power of two"));
    }
    Ok(())
}

/// Forward DFT of a real array.
pub fn dft(x: &[f64]) -> Result<Spectrum> {
    FftEngine::new(x.len())?.forward_real(x)
}

/// Inverse DFT of a Hermitian spectrum.
pub fn idft(s: &Spectrum) -> Result<Vec<f64>> {
    FftEngine::new(s.len())?.inverse_real(s)
}

/// `z[t] = Σ_s x[s]·y[(t-s) mod N]`, computed spectrally.
pub fn circular_convolve(x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    if x.len() != y.len() {
        return domain(format!("length mismatch: {} vs {}", x.len(), y.len()));
    }
    let engine = FftEngine::new(x.len())?;
    let prod = engine.forward_real(x)?.mul(&engine.forward_real(y)?)?;
    engine.inverse_real_unchecked(prod.coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{fill_standard_normal, substream};
    use std::f64::consts::PI;

    fn random(n: usize, stream: u64) -> Vec<f64> {
        let mut out = vec![0.0; n];
        fill_standard_normal(&mut substream(99, stream, 0), &mut out);
        out
    }

    fn naive_dft(x: &[f64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(t, &v)| {
                        let ph = -2.0 * PI * ((k * t) % n) as f64 / n as f64;
                        Complex64::from_polar(v, ph)
                    })
                    .sum()
            })
            .collect()
    }

    fn naive_idft(c: &[Complex64]) -> Vec<f64> {
        let n = c.len();
        (0..n)
            .map(|t| {
                c.iter()
                    .enumerate()
                    .map(|(k, v)| {
                        let ph = 2.0 * PI * ((k * t) % n) as f64 / n as f64;
                        (v * Complex64::from_polar(1.0, ph)).re
                    })
                    .sum::<f64>()
                    / n as f64
            })
            .collect()
    }

    #[test]
    fn constant_and_impulse() {
        let s = dft(&[1.0; 8]).unwrap();
        assert!((s.coeffs[0] - Complex64::new(8.0, 0.0)).norm() < 1e-14);
        assert!(s.coeffs[1..].iter().all(|c| c.norm() < 1e-14));

        let mut imp = vec![0.0; 8];
        imp[0] = 1.0;
        let s = dft(&imp).unwrap();
        assert!(s.coeffs.iter().all(|c| (c - Complex64::new(1.0, 0.0)).norm() < 1e-15));

        let mut c = vec![Complex64::new(0.0, 0.0); 8];
        c[0] = Complex64::new(8.0, 0.0);
        let back = idft(&Spectrum { coeffs: c }).unwrap();
        assert!(back.iter().all(|v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn matches_naive_sums() {
        let x = random(16, 0);
        let fast = dft(&x).unwrap();
        let slow = naive_dft(&x);
        for (a, b) in fast.coeffs.iter().zip(&slow) {
            assert!((a - b).norm() < 1e-12);
        }
        // Hermitian random spectrum = spectrum of a random real array
        let spec = dft(&random(16, 1)).unwrap();
        let fast = idft(&spec).unwrap();
        let slow = naive_idft(&spec.coeffs);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn round_trip_and_parseval() {
        let x = random(8, 2);
        let back = idft(&dft(&x).unwrap()).unwrap();
        assert!(x.iter().zip(&back).all(|(a, b)| (a - b).abs() < 1e-12));

        let x = random(4096, 3);
        let s = dft(&x).unwrap();
        let e_time: f64 = x.iter().map(|v| v * v).sum();
        let e_freq: f64 = s.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>() / 4096.0;
        assert!((e_time - e_freq).abs() / e_time < 1e-10);
        assert!(s.hermitian_defect() < 1e-12);
    }

    #[test]
    fn rejects_bad_lengths_and_asymmetry() {
        assert!(dft(&[1.0; 6]).is_err());
        assert!(dft(&[]).is_err());
        assert!(circular_convolve(&[1.0; 4], &[1.0; 8]).is_err());
        let mut c = vec![Complex64::new(0.0, 0.0); 4];
        c[1] = Complex64::new(1.0, 0.0);
        assert!(idft(&Spectrum { coeffs: c }).is_err());
    }

    #[test]
    fn convolution_identity_and_shift() {
        let y = random(8, 4);
        let mut imp = vec![0.0; 8];
        imp[0] = 1.0;
        let z = circular_convolve(&imp, &y).unwrap();
        assert!(z.iter().zip(&y).all(|(a, b)| (a - b).abs() < 1e-14));

        let z = circular_convolve(&[1.0, 2.0, 3.0, 4.0], &[0.0, 1.0, 0.0, 0.0]).unwrap();
        for (a, b) in z.iter().zip([4.0, 1.0, 2.0, 3.0]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn convolution_matches_direct_sum() {
        let x = random(16, 5);
        let y = random(16, 6);
        let z = circular_convolve(&x, &y).unwrap();
        let scale = z.iter().map(|v| v.abs()).fold(0.0, f64::max);
        for t in 0..16 {
            let direct: f64 = (0..16).map(|s| x[s] * y[(t + 16 - s) % 16]).sum();
            assert!((z[t] - direct).abs() <= 1e-10 * scale);
        }
        let zr = circular_convolve(&y, &x).unwrap();
        assert!(z.iter().zip(&zr).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn linearity() {
        let x = random(64, 7);
        let y = random(64, 8);
        let combo: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 2.0 * a - 0.5 * b).collect();
        let sx = dft(&x).unwrap();
        let sy = dft(&y).unwrap();
        let sc = dft(&combo).unwrap();
        for k in 0..64 {
            let expect = sx.coeffs[k] * 2.0 - sy.coeffs[k] * 0.5;
            assert!((sc.coeffs[k] - expect).norm() < 1e-12);
        }
    }
}
