//! Discretized causal kernels and their spectra.
//!
//! The regular part of the fractional kernel, `𝔥(t) = (H-½)(t+ε)^{H-3/2}`
//! for `t ≥ 0`, is sampled at `t_i = iΔt`, `i = 0..N-1`, i.e. the causal
//! support is laid out cyclically over one period. The Dirac part
//! `ε^{H-½}δ(t)` is added as an exact flat spectral constant.
//!
//! Only the fractional and `H = 0` spectra carry the `Δt` quadrature
//! weight; the exponential kernel is left unweighted so that the synthesis
//! pipeline contains exactly one `Δt`.

use num_complex::Complex64;

use crate::error::Result;
use crate::grid::SimConfig;
use crate::spectral::{FftEngine, Spectrum};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelKind {
    Fractional { hurst: f64 },
    LogH0,
    Exponential { t_large: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpectrum {
    pub spec: Spectrum,
    pub kind: KernelKind,
    pub epsilon: f64,
    pub dt: f64,
}

/// Samples `(H-½)(iΔt+ε)^{H-3/2}` for `i = 0..n`.
pub fn frak_h_samples(hurst: f64, epsilon: f64, dt: f64, n: usize) -> Vec<f64> {
    let pref = hurst - 0.5;
    let expo = hurst - 1.5;
    (0..n)
        .map(|i| pref * (i as f64 * dt + epsilon).powf(expo))
        .collect()
}

/// Regular part of the fractional kernel on the grid of `config`.
pub fn sample_frak_h(config: &SimConfig) -> Vec<f64> {
    frak_h_samples(config.hurst, config.epsilon, config.dt(), config.n_points)
}

/// Weight given to the Dirac part of the fractional kernel.
///
/// The left-Riemann sum of `𝔥` misses the continuous integral by about
/// `Δt·𝔥(0)/2`, a constant offset in every frequency bin. For `H < 1/2`
/// the kernel spectrum itself vanishes at low frequency, so this offset
/// biases large-scale statistics (about -14% on the variance at `H = 1/3`
/// with `ε = 4Δt` and `T = 2^-7`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DiracWeight {
    /// `ε^{H-1/2}`, the weight of the continuous kernel.
    Exact,
    /// Chosen so that the DC bin equals the continuous integral of the
    /// kernel over one period, `(T_tot + ε)^{H-1/2}`, which cancels the
    /// Riemann offset in all bins.
    #[default]
    IntegralMatched,
}

impl DiracWeight {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Exact => "exact",
            Self::IntegralMatched => "matched",
        }
    }
}

impl std::str::FromStr for DiracWeight {
    type Err = crate::MfouError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Self::Exact),
            "matched" => Ok(Self::IntegralMatched),
            other => crate::error::domain(format!("unknown Dirac weight {other:?} (exact|matched)")),
        }
    }
}

/// Spectrum `Δt·DFT{𝔥} + ε^{H-1/2}`.
pub fn kernel_spectrum_fractional(config: &SimConfig) -> Result<KernelSpectrum> {
    let engine = FftEngine::new(config.n_points)?;
    fractional_with(&engine, config, DiracWeight::Exact)
}

/// Spectrum `Δt·DFT{𝔥} + w` with the Dirac weight `w` chosen by `weight`.
pub fn kernel_spectrum_fractional_with(config: &SimConfig, weight: DiracWeight) -> Result<KernelSpectrum> {
    let engine = FftEngine::new(config.n_points)?;
    fractional_with(&engine, config, weight)
}

pub(crate) fn fractional_with(
    engine: &FftEngine,
    config: &SimConfig,
    weight: DiracWeight,
) -> Result<KernelSpectrum> {
    let dt = config.dt();
    let mut spec = engine.forward_real(&sample_frak_h(config))?;
    let e = config.hurst - 0.5;
    let dirac = match weight {
        DiracWeight::Exact => config.epsilon.powf(e),
        DiracWeight::IntegralMatched => (config.t_tot + config.epsilon).powf(e) - spec.coeffs[0].re * dt,
    };
    for c in spec.coeffs.iter_mut() {
        *c = *c * dt + dirac;
    }
    Ok(KernelSpectrum {
        spec,
        kind: KernelKind::Fractional {
            hurst: config.hurst,
        },
        epsilon: config.epsilon,
        dt,
    })
}

/// Zero-mean estimator of the `H = 0` kernel: the DC value of the regular
/// part is subtracted from every bin and no Dirac term is added.
pub fn kernel_spectrum_h0(config: &SimConfig) -> Result<KernelSpectrum> {
    let engine = FftEngine::new(config.n_points)?;
    h0_with(&engine, config)
}

pub(crate) fn h0_with(engine: &FftEngine, config: &SimConfig) -> Result<KernelSpectrum> {
    let dt = config.dt();
    let samples = frak_h_samples(0.0, config.epsilon, dt, config.n_points);
    let mut spec = engine.forward_real(&samples)?;
    let dc = spec.coeffs[0];
    for c in spec.coeffs.iter_mut() {
        *c = (*c - dc) * dt;
    }
    spec.coeffs[0] = Complex64::new(0.0, 0.0);
    Ok(KernelSpectrum {
        spec,
        kind: KernelKind::LogH0,
        epsilon: config.epsilon,
        dt,
    })
}

/// Spectrum of `e^{-t_i/T}` over one period, without quadrature weight.
pub fn kernel_spectrum_exponential(config: &SimConfig) -> Result<KernelSpectrum> {
    let engine = FftEngine::new(config.n_points)?;
    exponential_with(&engine, config)
}

pub(crate) fn exponential_with(engine: &FftEngine, config: &SimConfig) -> Result<KernelSpectrum> {
    let dt = config.dt();
    let samples: Vec<f64> = (0..config.n_points)
        .map(|i| (-(i as f64) * dt / config.t_large).exp())
        .collect();
    Ok(KernelSpectrum {
        spec: engine.forward_real(&samples)?,
        kind: KernelKind::Exponential {
            t_large: config.t_large,
        },
        epsilon: config.epsilon,
        dt,
    })
}
