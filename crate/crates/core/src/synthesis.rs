//! Periodic spectral synthesis of MfOU trajectories.
//!
//! Three stages, all on the same length-N periodic grid:
//!
//! 1. log-correlated base field `X̃ = idft(E · Ĥ₀ · dft(dW̃))`,
//! 2. chaos weight `M = exp(γX̃ − γ²·v̂)` with `v̂` the empirical mean of `X̃²`,
//! 3. trajectory `X = idft(E · Ĥ_H · dft(M ⊙ dW))`,
//!
//! where `E` is the spectrum of the exponential kernel and `Ĥ₀`, `Ĥ_H` the
//! fractional kernel spectra of [`crate::kernel`] (which carry the single
//! `Δt` factor).

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::Result;
use crate::grid::{SampledPath, SimConfig};
use crate::kernel::{exponential_with, fractional_with, h0_with, DiracWeight, KernelSpectrum};
use crate::noise::{generate_noise, NoisePair};
use crate::spectral::FftEngine;
use crate::summation::compensated_mean;

/// How the variance term of the chaos normalization is obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChaosNormalization {
    /// Empirical mean of `X̃²` over the trajectory itself.
    EmpiricalVariance,
    /// A caller-supplied variance.
    ExternalValue(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChaosPath {
    pub values: Vec<f64>,
    pub gamma_sq: f64,
    pub normalization_used: ChaosNormalization,
    /// The variance `v̂` that entered the exponent.
    pub variance_term: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryBundle {
    pub x: SampledPath,
    pub x_tilde: SampledPath,
    pub m: ChaosPath,
    pub traj_index: usize,
}

/// Precomputed transforms and kernel spectra for one configuration.
///
/// Building a synthesizer costs a handful of FFTs; each trajectory then
/// costs two forward and two inverse transforms.
#[derive(Debug, Clone)]
pub struct Synthesizer {
    config: Arc<SimConfig>,
    engine: FftEngine,
    exponential: KernelSpectrum,
    log_h0: KernelSpectrum,
    fractional: KernelSpectrum,
    base_filter: Vec<Complex64>,
    mfou_filter: Vec<Complex64>,
}

impl Synthesizer {
    /// Synthesizer with the [`DiracWeight::IntegralMatched`] kernel.
    pub fn new(config: &SimConfig) -> Result<Self> {
        Self::with_dirac_weight(config, DiracWeight::default())
    }

    pub fn with_dirac_weight(config: &SimConfig, weight: DiracWeight) -> Result<Self> {
        config.check()?;
        let engine = FftEngine::new(config.n_points)?;
        let exponential = exponential_with(&engine, config)?;
        let log_h0 = h0_with(&engine, config)?;
        let fractional = fractional_with(&engine, config, weight)?;
        let base_filter = exponential.spec.mul(&log_h0.spec)?.coeffs;
        let mfou_filter = exponential.spec.mul(&fractional.spec)?.coeffs;
        Ok(Self {
            config: Arc::new(config.clone()),
            engine,
            exponential,
            log_h0,
            fractional,
            base_filter,
            mfou_filter,
        })
    }

    /// Multiplies the fractional kernel spectrum by `factor`. Only used to
    /// inject a known fault when exercising the verification suite.
    pub fn with_kernel_scale(mut self, factor: f64) -> Self {
        for c in self.fractional.spec.coeffs.iter_mut() {
            *c *= factor;
        }
        for c in self.mfou_filter.iter_mut() {
            *c *= factor;
        }
        self
    }

    pub fn config(&self) -> &Arc<SimConfig> {
        &self.config
    }

    pub fn exponential_kernel(&self) -> &KernelSpectrum {
        &self.exponential
    }

    pub fn h0_kernel(&self) -> &KernelSpectrum {
        &self.log_h0
    }

    pub fn fractional_kernel(&self) -> &KernelSpectrum {
        &self.fractional
    }

    fn filter(&self, filter: &[Complex64], input: &[f64]) -> Result<Vec<f64>> {
        let mut spec = self.engine.forward_real(input)?.coeffs;
        for (c, h) in spec.iter_mut().zip(filter) {
            *c *= h;
        }
        self.engine.inverse_real_unchecked(spec)
    }

    pub fn xtilde(&self, noise: &NoisePair) -> Result<SampledPath> {
        let values = self.filter(&self.base_filter, &noise.dw_tilde)?;
        SampledPath::new(values, self.config.clone())
    }

    pub fn chaos(&self, x_tilde: &SampledPath, normalization: ChaosNormalization) -> ChaosPath {
        chaos_from(&x_tilde.values, self.config.gamma_sq, normalization)
    }

    pub fn mfou(&self, noise: &NoisePair, m: &ChaosPath) -> Result<SampledPath> {
        let weighted: Vec<f64> = if m.gamma_sq == 0.0 {
            noise.dw.clone()
        } else {
            noise.dw.iter().zip(&m.values).map(|(w, g)| w * g).collect()
        };
        self.mfou_from_weighted(&weighted)
    }

    /// Applies the MfOU filter to an already chaos-weighted noise.
    pub fn mfou_from_weighted(&self, weighted: &[f64]) -> Result<SampledPath> {
        let values = self.filter(&self.mfou_filter, weighted)?;
        SampledPath::new(values, self.config.clone())
    }

    pub fn bundle(&self, traj_index: usize) -> Result<TrajectoryBundle> {
        let noise = generate_noise(&self.config, traj_index)?;
        let x_tilde = self.xtilde(&noise)?;
        let m = self.chaos(&x_tilde, ChaosNormalization::EmpiricalVariance);
        let x = self.mfou(&noise, &m)?;
        Ok(TrajectoryBundle {
            x,
            x_tilde,
            m,
            traj_index,
        })
    }
}

fn chaos_from(x_tilde: &[f64], gamma_sq: f64, normalization: ChaosNormalization) -> ChaosPath {
    let variance_term = match normalization {
        ChaosNormalization::EmpiricalVariance => {
            let sq: Vec<f64> = x_tilde.iter().map(|v| v * v).collect();
            compensated_mean(&sq)
        }
        ChaosNormalization::ExternalValue(v) => v,
    };
    let values = if gamma_sq == 0.0 {
        vec![1.0; x_tilde.len()]
    } else {
        let gamma = gamma_sq.sqrt();
        let shift = gamma_sq * variance_term;
        x_tilde.iter().map(|v| (gamma * v - shift).exp()).collect()
    };
    ChaosPath {
        values,
        gamma_sq,
        normalization_used: normalization,
        variance_term,
    }
}

/// Log-correlated base field of one trajectory.
pub fn synth_xtilde(config: &SimConfig, noise: &NoisePair) -> Result<SampledPath> {
    Synthesizer::new(config)?.xtilde(noise)
}

/// Chaos weight with the empirical-variance normalization.
pub fn synth_chaos(config: &SimConfig, x_tilde: &SampledPath) -> ChaosPath {
    chaos_from(&x_tilde.values, config.gamma_sq, ChaosNormalization::EmpiricalVariance)
}

pub fn synth_chaos_with(
    config: &SimConfig,
    x_tilde: &SampledPath,
    normalization: ChaosNormalization,
) -> ChaosPath {
    chaos_from(&x_tilde.values, config.gamma_sq, normalization)
}

pub fn synth_mfou(config: &SimConfig, noise: &NoisePair, m: &ChaosPath) -> Result<SampledPath> {
    Synthesizer::new(config)?.mfou(noise, m)
}

/// Full composition noise → base field → chaos → trajectory.
pub fn synth_bundle(config: &SimConfig, traj_index: usize) -> Result<TrajectoryBundle> {
    Synthesizer::new(config)?.bundle(traj_index)
}
