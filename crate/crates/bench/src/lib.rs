//! Fixtures shared by the benchmarks in `benches/`.

use mfou::{SampledPath, SimConfig, Synthesizer};

/// Desk-scale proportions (`T = T_tot/128`, `ε = 4Δt`) on `n_points` samples.
pub fn bench_config(n_points: usize, hurst: f64, gamma_sq: f64) -> SimConfig {
    let mut cfg = SimConfig::desk(hurst, gamma_sq, 0x5eed);
    cfg.n_points = n_points;
    cfg.epsilon = 4.0 * cfg.dt();
    cfg.n_traj = 1;
    cfg
}

/// `count` synthesized MfOU trajectories (the ensemble size of `cfg` is
/// widened to `count`).
pub fn sample_paths(cfg: &SimConfig, count: usize) -> Vec<SampledPath> {
    let cfg = SimConfig { n_traj: cfg.n_traj.max(count), ..cfg.clone() };
    let synth = Synthesizer::new(&cfg).expect("valid benchmark config");
    (0..count)
        .map(|i| synth.bundle(i).expect("synthesis").x)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_valid() {
        let cfg = bench_config(1 << 12, 0.4, 0.02);
        cfg.check().unwrap();
        let paths = sample_paths(&cfg, 2);
        assert_eq!(paths.len(), 2);
        assert_ne!(paths[0].values, paths[1].values);
    }
}
