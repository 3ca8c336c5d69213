//! Deliberately naive reference implementations used to cross-check the
//! fast paths: `O(N²)` DFT and circular convolution, and a double-loop
//! structure function.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{domain, Result};
use crate::grid::SampledPath;
use crate::stats::grid_lag;

/// `X[k] = Σ_j x[j] e^{-2πijk/N}`.
pub fn naive_dft(x: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(j, &v)| {
                    let phase = -2.0 * PI * ((j * k) % n) as f64 / n as f64;
                    v * Complex64::from_polar(1.0, phase)
                })
                .sum()
        })
        .collect()
}

/// `x[j] = (1/N) Σ_k X[k] e^{2πijk/N}`, real part.
pub fn naive_idft(coeffs: &[Complex64]) -> Vec<f64> {
    let n = coeffs.len();
    (0..n)
        .map(|j| {
            let s: Complex64 = coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| {
                    let phase = 2.0 * PI * ((j * k) % n) as f64 / n as f64;
                    c * Complex64::from_polar(1.0, phase)
                })
                .sum();
            s.re / n as f64
        })
        .collect()
}

/// `(x ⊛ y)[i] = Σ_j x[j] y[(i-j) mod N]`.
pub fn naive_circular_convolve(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| (0..n).map(|j| x[j] * y[(i + n - j) % n]).sum())
        .collect()
}

/// Structure functions by scanning every ordered pair `(i, j)` and keeping
/// those separated by the lag.
pub fn brute_structure_function(
    paths: &[SampledPath],
    orders: &[u32],
    scales: &[f64],
) -> Result<BTreeMap<u32, Vec<f64>>> {
    if paths.is_empty() {
        return domain("no trajectories given");
    }
    let mut out: BTreeMap<u32, Vec<f64>> = orders.iter().map(|&n| (n, Vec::new())).collect();
    for &tau in scales {
        let k = grid_lag(paths[0].dt, tau)?;
        for &n in orders {
            let mut ensemble = 0.0;
            for p in paths {
                let len = p.values.len();
                let mut sum = 0.0;
                let mut count = 0usize;
                for i in 0..len {
                    for j in i + 1..len {
                        if j - i == k {
                            sum += (p.values[j] - p.values[i]).powi(n as i32);
                            count += 1;
                        }
                    }
                }
                ensemble += sum / count as f64;
            }
            out.get_mut(&n).unwrap().push(ensemble / paths.len() as f64);
        }
    }
    Ok(out)
}
