//! Empirical estimators on sampled trajectories.
//!
//! Increments are non-cyclic: at lag `k` only the `N - k` differences that
//! do not wrap around the period are used, even though synthesized paths
//! are periodic. Ensemble quantities are uniform averages of per-trajectory
//! estimates, accumulated in a fixed order with compensated sums so the
//! result does not depend on scheduling.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{domain, numeric, Result};
use crate::grid::SampledPath;
use crate::summation::{compensated_mean, NeumaierSum};

/// Relative slack when matching a time lag to the grid.
const GRID_SLACK: f64 = 1e-9;

/// Converts a time lag into a number of grid steps.
pub fn grid_lag(dt: f64, tau: f64) -> Result<usize> {
    if !(tau > 0.0 && tau.is_finite()) {
        return domain(format!("lag must be positive: {tau}"));
    }
    let k = (tau / dt).round();
    if k < 1.0 || (k * dt - tau).abs() > GRID_SLACK * tau {
        return domain(format!("lag {tau} is not a multiple of dt = {dt}"));
    }
    Ok(k as usize)
}

/// Differences `x[i+k] - x[i]` for `i = 0..N-k`.
pub fn increments_lag(values: &[f64], k: usize) -> Vec<f64> {
    if k >= values.len() {
        return Vec::new();
    }
    values[k..].iter().zip(values).map(|(b, a)| b - a).collect()
}

pub fn increments(path: &SampledPath, tau: f64) -> Result<Vec<f64>> {
    let k = grid_lag(path.dt, tau)?;
    if k >= path.len() {
        return domain(format!("lag {tau} exceeds the path length"));
    }
    Ok(increments_lag(&path.values, k))
}

/// Grid-aligned, strictly increasing lags `≈ dt·2^{j/per_octave}` within
/// `[tau_min, tau_max]`.
pub fn scale_grid(dt: f64, tau_min: f64, tau_max: f64, per_octave: u32) -> Result<Vec<f64>> {
    if per_octave == 0 {
        return domain("at least one scale per octave is required");
    }
    if !(tau_min > 0.0 && tau_max >= tau_min) {
        return domain(format!("invalid scale range [{tau_min}, {tau_max}]"));
    }
    let k_min = (tau_min / dt * (1.0 - GRID_SLACK)).ceil().max(1.0);
    let k_max = (tau_max / dt * (1.0 + GRID_SLACK)).floor();
    let mut lags: Vec<u64> = Vec::new();
    let mut j = 0u32;
    loop {
        let k = 2f64.powf(j as f64 / per_octave as f64).round();
        if k > k_max {
            break;
        }
        if k >= k_min && lags.last().is_none_or(|&l| (k as u64) > l) {
            lags.push(k as u64);
        }
        j += 1;
    }
    if lags.is_empty() {
        return domain(format!("no grid lag inside [{tau_min}, {tau_max}]"));
    }
    Ok(lags.into_iter().map(|k| k as f64 * dt).collect())
}

/// Octave grid spanning `[dt, t_tot/4]`.
pub fn default_scales(dt: f64, t_tot: f64) -> Result<Vec<f64>> {
    scale_grid(dt, dt, t_tot / 4.0, 1)
}

/// Per-scale empirical moments of an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    pub scales: Vec<f64>,
    /// order → per-scale `S_n(τ)`
    pub s_n: BTreeMap<u32, Vec<f64>>,
    /// `S₄/(3S₂²)` when orders 2 and 4 are present and `S₂ > 0`.
    pub flatness: Option<Vec<f64>>,
    /// Increments used per scale, summed over the ensemble.
    pub n_samples_per_scale: Vec<usize>,
    pub ensemble_size: usize,
}

impl MomentTable {
    pub fn order(&self, n: u32) -> Option<&[f64]> {
        self.s_n.get(&n).map(Vec::as_slice)
    }

    /// Uniform average of single-trajectory (or sub-ensemble) tables that
    /// share scales and orders, weighted by their ensemble sizes.
    pub fn average(tables: &[MomentTable]) -> Result<MomentTable> {
        let first = match tables.first() {
            Some(t) => t,
            None => return domain("no tables to average"),
        };
        for t in tables {
            if t.scales != first.scales || t.s_n.keys().ne(first.s_n.keys()) {
                return domain("tables with different scales or orders cannot be averaged");
            }
        }
        let ensemble_size: usize = tables.iter().map(|t| t.ensemble_size).sum();
        let mut s_n = BTreeMap::new();
        for &order in first.s_n.keys() {
            let col = (0..first.scales.len())
                .map(|i| {
                    let acc: NeumaierSum = tables
                        .iter()
                        .map(|t| t.s_n[&order][i] * t.ensemble_size as f64)
                        .collect();
                    acc.value() / ensemble_size as f64
                })
                .collect();
            s_n.insert(order, col);
        }
        let n_samples_per_scale = (0..first.scales.len())
            .map(|i| tables.iter().map(|t| t.n_samples_per_scale[i]).sum())
            .collect();
        Ok(MomentTable::assemble(first.scales.clone(), s_n, n_samples_per_scale, ensemble_size))
    }

    fn assemble(
        scales: Vec<f64>,
        s_n: BTreeMap<u32, Vec<f64>>,
        n_samples_per_scale: Vec<usize>,
        ensemble_size: usize,
    ) -> MomentTable {
        let mut table = MomentTable {
            scales,
            s_n,
            flatness: None,
            n_samples_per_scale,
            ensemble_size,
        };
        table.flatness = flatness(&table).ok();
        table
    }
}

/// Per-scale time averages of `(δ_τ x)^n` for one path.
fn path_moments(values: &[f64], orders: &[u32], lags: &[usize]) -> Vec<Vec<f64>> {
    let max_order = orders.iter().copied().max().unwrap_or(0) as usize;
    lags.iter()
        .map(|&k| {
            let mut acc = vec![NeumaierSum::new(); max_order + 1];
            let mut count = 0usize;
            for (b, a) in values[k..].iter().zip(values) {
                let d = b - a;
                let mut p = 1.0;
                for slot in acc.iter_mut().skip(1) {
                    p *= d;
                    slot.add(p);
                }
                count += 1;
            }
            orders
                .iter()
                .map(|&n| {
                    if n == 0 {
                        1.0
                    } else {
                        acc[n as usize].value() / count as f64
                    }
                })
                .collect()
        })
        .collect()
}

/// Structure functions `S_n(τ)` of a single path.
pub fn path_structure_function(path: &SampledPath, orders: &[u32], scales: &[f64]) -> Result<MomentTable> {
    if orders.is_empty() || scales.is_empty() {
        return domain("orders and scales must be non-empty");
    }
    let lags = scales
        .iter()
        .map(|&tau| grid_lag(path.dt, tau))
        .collect::<Result<Vec<_>>>()?;
    if let Some(&k) = lags.iter().find(|&&k| k >= path.len()) {
        return domain(format!("lag of {k} steps exceeds the path length"));
    }
    if lags.windows(2).any(|w| w[1] <= w[0]) {
        return domain("scales must be strictly increasing");
    }
    let per_scale = path_moments(&path.values, orders, &lags);
    let mut s_n = BTreeMap::new();
    for (j, &n) in orders.iter().enumerate() {
        s_n.insert(n, per_scale.iter().map(|row| row[j]).collect());
    }
    let counts = lags.iter().map(|&k| path.len() - k).collect();
    Ok(MomentTable::assemble(scales.to_vec(), s_n, counts, 1))
}

/// Ensemble structure functions: per-trajectory time averages with weight
/// `1/(N-k)`, then a uniform average over trajectories.
pub fn structure_function(paths: &[SampledPath], orders: &[u32], scales: &[f64]) -> Result<MomentTable> {
    if paths.is_empty() {
        return domain("no trajectories given");
    }
    let dt = paths[0].dt;
    if paths.iter().any(|p| p.dt != dt || p.len() != paths[0].len()) {
        return domain("trajectories do not share a grid");
    }
    let tables = paths
        .par_iter()
        .map(|p| path_structure_function(p, orders, scales))
        .collect::<Result<Vec<_>>>()?;
    MomentTable::average(&tables)
}

/// `F(τ) = S₄(τ) / (3 S₂(τ)²)`.
pub fn flatness(table: &MomentTable) -> Result<Vec<f64>> {
    let (s2, s4) = match (table.s_n.get(&2), table.s_n.get(&4)) {
        (Some(a), Some(b)) => (a, b),
        _ => return domain("flatness needs orders 2 and 4"),
    };
    s2.iter()
        .zip(s4)
        .zip(&table.scales)
        .map(|((&a, &b), &tau)| {
            if a <= 0.0 {
                numeric(format!("S2 vanishes at scale {tau}"))
            } else {
                Ok(b / (3.0 * a * a))
            }
        })
        .collect()
}

/// Least-squares power law `S(τ) ≈ e^{log_amplitude} τ^{exponent}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub exponent: f64,
    pub log_amplitude: f64,
    /// Smallest and largest scale actually used.
    pub fit_range: (f64, f64),
    pub residual_rms: f64,
    pub n_points: usize,
}

impl FitResult {
    pub fn predict(&self, tau: f64) -> f64 {
        (self.log_amplitude + self.exponent * tau.ln()).exp()
    }
}

/// Ordinary least squares of `ln value` against `ln τ` over the scales in
/// `range` (inclusive, with a small relative slack).
pub fn fit_series(scales: &[f64], values: &[f64], range: (f64, f64)) -> Result<FitResult> {
    if scales.len() != values.len() {
        return domain("scales and values differ in length");
    }
    let (lo, hi) = (range.0 * (1.0 - GRID_SLACK), range.1 * (1.0 + GRID_SLACK));
    let selected: Vec<(f64, f64)> = scales
        .iter()
        .zip(values)
        .filter(|(&t, _)| t >= lo && t <= hi)
        .map(|(&t, &v)| (t, v))
        .collect();
    if selected.len() < 5 {
        return domain(format!(
            "{} scales inside [{}, {}], at least 5 are needed",
            selected.len(),
            range.0,
            range.1
        ));
    }
    if let Some(&(t, v)) = selected.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
        return numeric(format!("non-positive value {v} at scale {t}"));
    }
    let xs: Vec<f64> = selected.iter().map(|(t, _)| t.ln()).collect();
    let ys: Vec<f64> = selected.iter().map(|(_, v)| v.ln()).collect();
    let mx = compensated_mean(&xs);
    let my = compensated_mean(&ys);
    let sxx: NeumaierSum = xs.iter().map(|x| (x - mx) * (x - mx)).collect();
    let sxy: NeumaierSum = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).collect();
    let slope = sxy.value() / sxx.value();
    let intercept = my - slope * mx;
    let rss: NeumaierSum = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .collect();
    Ok(FitResult {
        exponent: slope,
        log_amplitude: intercept,
        fit_range: (selected[0].0, selected[selected.len() - 1].0),
        residual_rms: (rss.value() / selected.len() as f64).sqrt(),
        n_points: selected.len(),
    })
}

pub fn fit_power_law(table: &MomentTable, order: u32, fit_range: (f64, f64)) -> Result<FitResult> {
    match table.s_n.get(&order) {
        Some(values) => fit_series(&table.scales, values, fit_range),
        None => domain(format!("order {order} is not in the table")),
    }
}

/// Histogram of standardized increments at one scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub scale: f64,
    /// Standard deviation used for the standardization.
    pub sigma: f64,
    pub counts: Vec<u64>,
    /// Samples below the first and above the last edge.
    pub underflow: u64,
    pub overflow: u64,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.underflow + self.overflow
    }
}

/// Per-scale histograms over the common standardized range `[-8, 8]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramSet {
    pub scales: Vec<f64>,
    /// `n_bins + 1` edges in units of the per-scale standard deviation.
    pub edges: Vec<f64>,
    pub histograms: Vec<Histogram>,
}

impl HistogramSet {
    pub fn bin_width(&self) -> f64 {
        self.edges[1] - self.edges[0]
    }

    /// Probability density of each bin, normalized by all samples of the
    /// scale (including those outside the range).
    pub fn densities(&self, scale_index: usize) -> Vec<f64> {
        let h = &self.histograms[scale_index];
        let norm = h.total() as f64 * self.bin_width();
        h.counts.iter().map(|&c| c as f64 / norm).collect()
    }
}

/// Half-width of the histogram range in standard deviations.
pub const HISTOGRAM_RANGE: f64 = 8.0;

pub fn pdf_histograms(paths: &[SampledPath], scales: &[f64], n_bins: usize) -> Result<HistogramSet> {
    if n_bins < 16 {
        return domain(format!("at least 16 bins are required, got {n_bins}"));
    }
    if paths.is_empty() || scales.is_empty() {
        return domain("paths and scales must be non-empty");
    }
    let dt = paths[0].dt;
    let edges: Vec<f64> = (0..=n_bins)
        .map(|i| -HISTOGRAM_RANGE + 2.0 * HISTOGRAM_RANGE * i as f64 / n_bins as f64)
        .collect();
    let width = 2.0 * HISTOGRAM_RANGE / n_bins as f64;
    let mut histograms = Vec::with_capacity(scales.len());
    for &tau in scales {
        let k = grid_lag(dt, tau)?;
        let mut s1 = NeumaierSum::new();
        let mut s2 = NeumaierSum::new();
        let mut count = 0usize;
        for p in paths {
            if k >= p.len() {
                return domain(format!("lag {tau} exceeds the path length"));
            }
            for (b, a) in p.values[k..].iter().zip(&p.values) {
                let d = b - a;
                s1.add(d);
                s2.add(d * d);
            }
            count += p.len() - k;
        }
        let mean = s1.value() / count as f64;
        let var = s2.value() / count as f64 - mean * mean;
        if !(var > 0.0 && var.is_finite()) {
            return numeric(format!("degenerate increment variance at scale {tau}"));
        }
        let sigma = var.sqrt();
        let mut counts = vec![0u64; n_bins];
        let (mut underflow, mut overflow) = (0u64, 0u64);
        for p in paths {
            for (b, a) in p.values[k..].iter().zip(&p.values) {
                let z = (b - a) / sigma;
                let pos = (z + HISTOGRAM_RANGE) / width;
                if pos < 0.0 {
                    underflow += 1;
                } else if pos >= n_bins as f64 {
                    overflow += 1;
                } else {
                    counts[pos as usize] += 1;
                }
            }
        }
        histograms.push(Histogram {
            scale: tau,
            sigma,
            counts,
            underflow,
            overflow,
        });
    }
    Ok(HistogramSet {
        scales: scales.to_vec(),
        edges,
        histograms,
    })
}
