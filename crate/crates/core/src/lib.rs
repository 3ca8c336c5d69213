//! Multifractal fractional Ornstein-Uhlenbeck (MfOU) processes.
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`]: simulation parameters, the periodic sampling grid and
//!   moment-existence ranges.
//! * [`noise`]: seed-reproducible Gaussian white noises, one substream per
//!   trajectory and channel.
//! * [`spectral`]: DFT contract and circular convolution.
//! * [`kernel`]: spectra of the regularized fractional kernels and of the
//!   exponential Ornstein-Uhlenbeck kernel.
//! * [`synthesis`]: the three-stage periodic pipeline (log-correlated field,
//!   chaos weight, MfOU trajectory).
//! * [`theory`]: closed-form and quadrature predictions (variance,
//!   covariances, amplitude constants, scaling laws).
//! * [`stats`]: increments, structure functions, flatness, histograms and
//!   log-log fits.
//! * [`io`] and [`verify`]: persistence formats and the end-to-end
//!   comparison between synthesized trajectories and predictions.

pub mod error;
pub mod grid;
pub mod io;
pub mod kernel;
pub mod noise;
pub mod oracle;
pub mod quadrature;
pub mod spectral;
pub mod stats;
pub mod summation;
pub mod synthesis;
pub mod theory;
pub mod verify;

pub use error::{MfouError, Result};
pub use grid::{max_even_moment, ConfigViolation, MomentBound, SampledPath, SimConfig};
pub use kernel::{DiracWeight, KernelKind, KernelSpectrum};
pub use noise::{generate_noise, NoisePair};
pub use spectral::Spectrum;
pub use stats::{FitResult, HistogramSet, MomentTable};
pub use synthesis::{ChaosNormalization, ChaosPath, Synthesizer, TrajectoryBundle};
pub use theory::TheoryReport;
pub use verify::{CheckRecord, VerifyPlan, VerifyReport};
