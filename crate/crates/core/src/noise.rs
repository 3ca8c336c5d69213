//! Seed-reproducible discrete white noises.
//!
//! Every trajectory draws from two independent channels: `dw` drives the
//! MfOU kernel and `dw_tilde` drives the log-correlated base field. Each
//! (seed, trajectory, channel) triple owns a distinct ChaCha20 stream: the
//! 256-bit key is expanded from `seed` and the 64-bit stream id is
//! `2·traj_index + channel`. Streams never overlap, so ensembles can be
//! generated in any order or in parallel with bit-identical results.
//!
//! Gaussian variates use the Marsaglia polar method on 53-bit uniforms; both
//! members of each accepted pair are consumed in order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{domain, Result};
use crate::grid::SimConfig;

/// Channel id of the noise driving the MfOU kernel.
pub const CHANNEL_DW: u64 = 0;
/// Channel id of the noise driving the log-correlated field.
pub const CHANNEL_DW_TILDE: u64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct NoisePair {
    /// Increments of the Wiener process `W`, variance `dt` each.
    pub dw: Vec<f64>,
    /// Increments of the independent Wiener process `W̃`, variance `dt` each.
    pub dw_tilde: Vec<f64>,
    pub seed: u64,
    pub traj_index: u64,
}

/// Deterministic stream for one (seed, trajectory, channel) triple.
pub fn substream(seed: u64, traj_index: u64, channel: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(traj_index.wrapping_mul(2).wrapping_add(channel));
    rng
}

/// Fills `out` with i.i.d. standard normal variates (polar method).
pub fn fill_standard_normal<R: Rng>(rng: &mut R, out: &mut [f64]) {
    let mut i = 0;
    while i < out.len() {
        let (a, b) = polar_pair(rng);
        out[i] = a;
        if i + 1 < out.len() {
            out[i + 1] = b;
        }
        i += 2;
    }
}

fn polar_pair<R: Rng>(rng: &mut R) -> (f64, f64) {
    loop {
        let u = 2.0 * rng.random::<f64>() - 1.0;
        let v = 2.0 * rng.random::<f64>() - 1.0;
        let s = u * u + v * v;
        if s > 0.0 && s < 1.0 {
            let f = (-2.0 * s.ln() / s).sqrt();
            return (u * f, v * f);
        }
    }
}

/// Draws `n` zero-mean Gaussians of variance `dt` from one substream.
pub fn gaussian_increments(seed: u64, traj_index: u64, channel: u64, n: usize, dt: f64) -> Vec<f64> {
    let mut rng = substream(seed, traj_index, channel);
    let mut out = vec![0.0; n];
    fill_standard_normal(&mut rng, &mut out);
    let scale = dt.sqrt();
    out.iter_mut().for_each(|x| *x *= scale);
    out
}

/// Generates both noise channels of trajectory `traj_index`.
pub fn generate_noise(config: &SimConfig, traj_index: usize) -> Result<NoisePair> {
    if traj_index >= config.n_traj {
        return domain(format!(
            "traj_index {traj_index} out of range for n_traj = {}",
            config.n_traj
        ));
    }
    let dt = config.dt();
    let idx = traj_index as u64;
    Ok(NoisePair {
        dw: gaussian_increments(config.seed, idx, CHANNEL_DW, config.n_points, dt),
        dw_tilde: gaussian_increments(config.seed, idx, CHANNEL_DW_TILDE, config.n_points, dt),
        seed: config.seed,
        traj_index: idx,
    })
}
