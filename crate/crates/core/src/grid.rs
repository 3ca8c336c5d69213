//! Simulation parameters, the periodic sampling grid and moment-existence
//! ranges.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{domain, MfouError, Result};

/// All parameters of one synthesis run.
///
/// Times are expressed in a single arbitrary unit. `epsilon` is stored as an
/// absolute time, not as a multiple of the time step.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Number of samples per period (DFT length), a power of two.
    pub n_points: usize,
    /// Total period of the trajectories.
    pub t_tot: f64,
    /// Large (Ornstein-Uhlenbeck) correlation time `T`.
    pub t_large: f64,
    /// Regularization scale.
    pub epsilon: f64,
    /// Hurst exponent in (0, 1).
    pub hurst: f64,
    /// Intermittency coefficient gamma squared.
    pub gamma_sq: f64,
    pub seed: u64,
    /// Number of independent trajectories in the ensemble.
    pub n_traj: usize,
}

/// One violated invariant of a [`SimConfig`].
#[derive(Debug, Clone, PartialEq)]
pub enum ConfigViolation {
    NotPowerOfTwo(usize),
    NonPositiveTotalTime(f64),
    NonPositiveLargeTime(f64),
    NonPositiveEpsilon(f64),
    EpsilonBelowTimeStep { epsilon: f64, dt: f64 },
    AliasingGuard { t_large: f64, t_tot: f64 },
    HurstOutOfRange(f64),
    NegativeGammaSq(f64),
    GammaSqTooLarge(f64),
    EmptyEnsemble,
}

impl fmt::Display for ConfigViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NotPowerOfTwo(n) => write!(f, "n_points = {n} is not a power of two"),
            Self::NonPositiveTotalTime(t) => write!(f, "t_tot = {t} is not positive"),
            Self::NonPositiveLargeTime(t) => write!(f, "t_large = {t} is not positive"),
            Self::NonPositiveEpsilon(e) => write!(f, "epsilon = {e} is not positive"),
            Self::EpsilonBelowTimeStep { epsilon, dt } => {
                write!(f, "epsilon = {epsilon} < dt = {dt}")
            }
            Self::AliasingGuard { t_large, t_tot } => {
                write!(f, "t_large = {t_large} must be < t_tot/8 = {}", t_tot / 8.0)
            }
            Self::HurstOutOfRange(h) => write!(f, "hurst outside (0,1): {h}"),
            Self::NegativeGammaSq(g) => write!(f, "gamma_sq < 0: {g}"),
            Self::GammaSqTooLarge(g) => write!(f, "gamma_sq ≥ 1/4: {g}"),
            Self::EmptyEnsemble => write!(f, "n_traj must be at least 1"),
        }
    }
}

/// Relative slack on `epsilon ≥ dt`, so that `epsilon = k·dt` computed in
/// floating point is never rejected for k = 1.
const EPS_DT_SLACK: f64 = 1e-12;

impl SimConfig {
    /// Desk-scale defaults: `N = 2^21`, `T_tot = 1`, `T = 2^-7`, `ε = 4Δt`,
    /// ten trajectories.
    pub fn desk(hurst: f64, gamma_sq: f64, seed: u64) -> Self {
        let n_points = 1 << 21;
        let t_tot = 1.0;
        Self {
            n_points,
            t_tot,
            t_large: t_tot / 128.0,
            epsilon: 4.0 * t_tot / n_points as f64,
            hurst,
            gamma_sq,
            seed,
            n_traj: 10,
        }
    }

    pub fn dt(&self) -> f64 {
        self.t_tot / self.n_points as f64
    }

    /// Checks every invariant and returns the full list of violations.
    pub fn validate(&self) -> std::result::Result<(), Vec<ConfigViolation>> {
        let mut errs = Vec::new();
        if !self.n_points.is_power_of_two() || self.n_points < 2 {
            errs.push(ConfigViolation::NotPowerOfTwo(self.n_points));
        }
        if !(self.t_tot > 0.0 && self.t_tot.is_finite()) {
            errs.push(ConfigViolation::NonPositiveTotalTime(self.t_tot));
        }
        if !(self.t_large > 0.0 && self.t_large.is_finite()) {
            errs.push(ConfigViolation::NonPositiveLargeTime(self.t_large));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            errs.push(ConfigViolation::NonPositiveEpsilon(self.epsilon));
        } else if self.n_points > 0 && self.t_tot > 0.0 {
            let dt = self.dt();
            if self.epsilon < dt * (1.0 - EPS_DT_SLACK) {
                errs.push(ConfigViolation::EpsilonBelowTimeStep {
                    epsilon: self.epsilon,
                    dt,
                });
            }
        }
        if self.t_large > 0.0 && self.t_tot > 0.0 && self.t_large >= self.t_tot / 8.0 {
            errs.push(ConfigViolation::AliasingGuard {
                t_large: self.t_large,
                t_tot: self.t_tot,
            });
        }
        if !(self.hurst > 0.0 && self.hurst < 1.0) {
            errs.push(ConfigViolation::HurstOutOfRange(self.hurst));
        }
        if self.gamma_sq < 0.0 || self.gamma_sq.is_nan() {
            errs.push(ConfigViolation::NegativeGammaSq(self.gamma_sq));
        } else if self.gamma_sq >= 0.25 {
            errs.push(ConfigViolation::GammaSqTooLarge(self.gamma_sq));
        }
        if self.n_traj == 0 {
            errs.push(ConfigViolation::EmptyEnsemble);
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }

    /// Like [`validate`](Self::validate) but folded into the crate error.
    pub fn check(&self) -> Result<()> {
        self.validate().map_err(MfouError::InvalidConfig)
    }

    /// Parses the flat `key=value` format. Blank lines and `#` comments are
    /// ignored; keys missing from the text keep the values of `base`.
    pub fn parse_key_values(text: &str, base: SimConfig) -> Result<SimConfig> {
        let mut cfg = base;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                MfouError::Format(format!("line {}: expected key=value", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |e: &dyn fmt::Display| {
                MfouError::Format(format!("line {}: bad value for {key}: {e}", lineno + 1))
            };
            match key {
                "n_points" => cfg.n_points = parse_num(value).map_err(|e| bad(&e))?,
                "t_tot" => cfg.t_tot = parse_num(value).map_err(|e| bad(&e))?,
                "t_large" => cfg.t_large = parse_num(value).map_err(|e| bad(&e))?,
                "epsilon" => cfg.epsilon = parse_num(value).map_err(|e| bad(&e))?,
                "hurst" => cfg.hurst = parse_num(value).map_err(|e| bad(&e))?,
                "gamma_sq" => cfg.gamma_sq = parse_num(value).map_err(|e| bad(&e))?,
                "seed" => cfg.seed = parse_num(value).map_err(|e| bad(&e))?,
                "n_traj" => cfg.n_traj = parse_num(value).map_err(|e| bad(&e))?,
                other => {
                    return Err(MfouError::Format(format!(
                        "line {}: unknown key {other}",
                        lineno + 1
                    )))
                }
            }
        }
        Ok(cfg)
    }

    /// Serializes to the `key=value` format read by
    /// [`parse_key_values`](Self::parse_key_values).
    pub fn to_key_values(&self) -> String {
        format!(
            "n_points={}\nt_tot={}\nt_large={}\nepsilon={}\nhurst={}\ngamma_sq={}\nseed={}\nn_traj={}\n",
            self.n_points,
            self.t_tot,
            self.t_large,
            self.epsilon,
            self.hurst,
            self.gamma_sq,
            self.seed,
            self.n_traj
        )
    }
}

fn parse_num<T: FromStr>(s: &str) -> std::result::Result<T, String>
where
    T::Err: fmt::Display,
{
    s.parse::<T>().map_err(|e| e.to_string())
}

/// Largest finite even moment order guaranteed by the existence condition
/// `γ² < min(1/4, H/(n-1))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentBound {
    /// Gaussian case: every moment is finite.
    Unbounded,
    /// Moments are guaranteed up to and including this (even) order.
    Order(u32),
}

impl MomentBound {
    pub fn allows(&self, order: u32) -> bool {
        match *self {
            MomentBound::Unbounded => true,
            MomentBound::Order(max) => order <= max,
        }
    }
}

/// Returns `2n` for the largest `n ≥ 1` with `gamma_sq < hurst/(n-1)`.
pub fn max_even_moment(hurst: f64, gamma_sq: f64) -> Result<MomentBound> {
    if !(hurst > 0.0 && hurst < 1.0) {
        return domain(format!("hurst outside (0,1): {hurst}"));
    }
    if !(0.0..0.25).contains(&gamma_sq) {
        return domain(format!("gamma_sq outside [0, 1/4): {gamma_sq}"));
    }
    if gamma_sq == 0.0 {
        return Ok(MomentBound::Unbounded);
    }
    let holds = |n: u64| n <= 1 || gamma_sq < hurst / (n - 1) as f64;
    let mut n = (hurst / gamma_sq).ceil().max(1.0) as u64;
    // The ceiling can be off by one when hurst/gamma_sq rounds across an
    // integer; settle on the exact inequality.
    while n > 1 && !holds(n) {
        n -= 1;
    }
    while holds(n + 1) {
        n += 1;
    }
    Ok(MomentBound::Order(2 * n as u32))
}

/// A uniformly sampled trajectory on the periodic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPath {
    pub values: Vec<f64>,
    pub dt: f64,
    pub meta: Arc<SimConfig>,
}

impl SampledPath {
    pub fn new(values: Vec<f64>, meta: Arc<SimConfig>) -> Result<Self> {
        if values.len() != meta.n_points {
            return domain(format!(
                "path length {} differs from n_points {}",
                values.len(),
                meta.n_points
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(MfouError::Numeric(format!("non-finite sample at index {i}")));
        }
        Ok(Self {
            dt: meta.dt(),
            values,
            meta,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }
}
