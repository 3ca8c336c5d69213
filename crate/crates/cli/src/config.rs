//! Assembling configurations from files and flags.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use mfou::{DiracWeight, SimConfig, VerifyPlan};

/// Flags shared by every subcommand that builds a configuration. Flags take
/// precedence over the `--config` file, which takes precedence over the
/// desk-scale defaults.
#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// `key=value` file with any of n_points, t_tot, t_large, epsilon,
    /// hurst, gamma_sq, seed, n_traj.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed of the random streams.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of independent trajectories.
    #[arg(long)]
    pub n_traj: Option<usize>,
    /// Hurst exponent(s); `verify` accepts a comma-separated list.
    #[arg(long, value_delimiter = ',')]
    pub hurst: Vec<f64>,
    /// Intermittency coefficient(s); `verify` accepts a comma-separated list.
    #[arg(long, value_delimiter = ',')]
    pub gamma_sq: Vec<f64>,
    /// Regularization scale in units of the time step.
    #[arg(long)]
    pub epsilon_dt_multiple: Option<f64>,
    /// Samples per trajectory (power of two).
    #[arg(long)]
    pub n_points: Option<usize>,
    /// Period of the trajectories.
    #[arg(long)]
    pub t_tot: Option<f64>,
    /// Large correlation time.
    #[arg(long)]
    pub t_large: Option<f64>,
    /// Dirac weight of the discretized fractional kernel: matched | exact.
    #[arg(long, default_value = "matched")]
    pub dirac_weight: DiracWeight,
}

/// Splits a config file into the single-valued part understood by
/// [`SimConfig::parse_key_values`] and the (possibly listed) hurst and
/// gamma_sq values.
struct ConfigFile {
    scalar_text: String,
    hursts: Vec<f64>,
    gamma_sqs: Vec<f64>,
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|v| v.trim().parse::<f64>().with_context(|| format!("bad value for {key}: {v:?}")))
        .collect()
}

fn read_config_file(path: &Path) -> Result<ConfigFile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = ConfigFile {
        scalar_text: String::new(),
        hursts: Vec::new(),
        gamma_sqs: Vec::new(),
    };
    for line in text.lines() {
        let body = line.split('#').next().unwrap_or("").trim();
        match body.split_once('=') {
            Some((k, v)) if k.trim() == "hurst" => out.hursts = parse_list("hurst", v)?,
            Some((k, v)) if k.trim() == "gamma_sq" => out.gamma_sqs = parse_list("gamma_sq", v)?,
            _ => {
                out.scalar_text.push_str(line);
                out.scalar_text.push('\n');
            }
        }
    }
    Ok(out)
}

/// Configuration after file and flag overrides, with `hurst` and
/// `gamma_sq` possibly listing several values.
struct Merged {
    base: SimConfig,
    hursts: Vec<f64>,
    gamma_sqs: Vec<f64>,
}

impl ConfigArgs {
    fn merge(&self) -> Result<Merged> {
        let mut base = SimConfig::desk(0.5, 0.0, 0);
        let mut hursts = Vec::new();
        let mut gamma_sqs = Vec::new();
        if let Some(path) = &self.config {
            let file = read_config_file(path)?;
            base = SimConfig::parse_key_values(&file.scalar_text, base)
                .with_context(|| format!("parsing {}", path.display()))?;
            hursts = file.hursts;
            gamma_sqs = file.gamma_sqs;
        }
        // epsilon follows the grid unless set explicitly
        let eps_multiple = base.epsilon / base.dt();
        if let Some(n) = self.n_points {
            base.n_points = n;
        }
        if let Some(t) = self.t_tot {
            base.t_tot = t;
        }
        base.epsilon = eps_multiple * base.dt();
        if let Some(m) = self.epsilon_dt_multiple {
            base.epsilon = m * base.dt();
        }
        if let Some(t) = self.t_large {
            base.t_large = t;
        }
        if let Some(s) = self.seed {
            base.seed = s;
        }
        if let Some(n) = self.n_traj {
            base.n_traj = n;
        }
        if !self.hurst.is_empty() {
            hursts = self.hurst.clone();
        }
        if !self.gamma_sq.is_empty() {
            gamma_sqs = self.gamma_sq.clone();
        }
        Ok(Merged {
            base,
            hursts,
            gamma_sqs,
        })
    }

    /// A single validated configuration (`synth`, `theory`).
    pub fn sim_config(&self) -> Result<SimConfig> {
        let m = self.merge()?;
        let mut cfg = m.base;
        cfg.hurst = single("hurst", &m.hursts, 0.5)?;
        cfg.gamma_sq = single("gamma_sq", &m.gamma_sqs, 0.0)?;
        cfg.check()?;
        Ok(cfg)
    }

    /// A verification plan over the listed `(H, γ²)` grid, defaulting to
    /// the desk-scale grid.
    pub fn verify_plan(&self) -> Result<VerifyPlan> {
        let m = self.merge()?;
        let mut plan = VerifyPlan::desk(m.base.seed);
        plan.n_points = m.base.n_points;
        plan.t_tot = m.base.t_tot;
        plan.t_large = m.base.t_large;
        plan.epsilon_dt_multiple = m.base.epsilon / m.base.dt();
        plan.n_traj = m.base.n_traj;
        plan.dirac_weight = self.dirac_weight;
        if !m.hursts.is_empty() {
            plan.hursts = m.hursts;
        }
        if !m.gamma_sqs.is_empty() {
            plan.gamma_sqs = m.gamma_sqs;
        }
        Ok(plan)
    }
}

fn single(name: &str, values: &[f64], default: f64) -> Result<f64> {
    match values {
        [] => Ok(default),
        [v] => Ok(*v),
        _ => bail!("{name} takes a single value for this subcommand, got {values:?}"),
    }
}

/// Scale specification `min:max:per-octave`. Bounds are times, or
/// multiples of the time step when suffixed with `dt` (e.g. `4dt:1024dt:2`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleSpec {
    min: Bound,
    max: Bound,
    pub per_octave: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Bound {
    Time(f64),
    Steps(f64),
}

impl Bound {
    fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        Ok(match s.strip_suffix("dt") {
            Some(k) => Bound::Steps(k.trim().parse().with_context(|| format!("bad scale bound {s:?}"))?),
            None => Bound::Time(s.parse().with_context(|| format!("bad scale bound {s:?}"))?),
        })
    }

    fn resolve(self, dt: f64) -> f64 {
        match self {
            Bound::Time(t) => t,
            Bound::Steps(k) => k * dt,
        }
    }
}

impl std::str::FromStr for ScaleSpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let [min, max, per] = parts[..] else {
            bail!("scales must look like min:max:per-octave, got {s:?}");
        };
        Ok(Self {
            min: Bound::parse(min)?,
            max: Bound::parse(max)?,
            per_octave: per.trim().parse().with_context(|| format!("bad per-octave count {per:?}"))?,
        })
    }
}

impl ScaleSpec {
    pub fn range(&self, dt: f64) -> (f64, f64) {
        (self.min.resolve(dt), self.max.resolve(dt))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scale_spec_parsing() {
        let s: ScaleSpec = "4dt:1024dt:2".parse().unwrap();
        assert_eq!(s.range(0.5), (2.0, 512.0));
        assert_eq!(s.per_octave, 2);
        let s: ScaleSpec = "1e-3:0.1:4".parse().unwrap();
        assert_eq!(s.range(1.0), (1e-3, 0.1));
        assert!("1:2".parse::<ScaleSpec>().is_err());
        assert!("a:2:1".parse::<ScaleSpec>().is_err());
    }
}
