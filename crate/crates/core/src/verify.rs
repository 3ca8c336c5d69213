//! End-to-end comparison of synthesized ensembles with the predictions.
//!
//! For every `(H, γ²)` cell of a [`VerifyPlan`] an ensemble is synthesized,
//! reduced to per-trajectory summaries (structure functions, variance,
//! chaos second moment) and compared with the theory module. The suite is
//! completed by self-consistency checks of the theory and by oracle
//! equivalence of the fast numerical kernels.
//!
//! All cells use the same seed, so cells differ only through `H` and `γ²`
//! (common random numbers). Reports are formatted with fixed precision and
//! assembled in plan order, which makes them byte-reproducible.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::grid::SimConfig;
use crate::kernel::DiracWeight;
use crate::noise::gaussian_increments;
use crate::oracle::{brute_structure_function, naive_circular_convolve, naive_dft, naive_idft};
use crate::spectral::{circular_convolve, dft, idft};
use crate::stats::{fit_series, path_structure_function, scale_grid, structure_function, FitResult, MomentTable};
use crate::summation::{compensated_mean, NeumaierSum};
use crate::synthesis::Synthesizer;
use crate::theory;
use crate::SampledPath;

/// Parameters of a verification run.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyPlan {
    pub n_points: usize,
    pub t_tot: f64,
    pub t_large: f64,
    /// `ε` as a multiple of the time step.
    pub epsilon_dt_multiple: f64,
    pub seed: u64,
    pub n_traj: usize,
    pub hursts: Vec<f64>,
    pub gamma_sqs: Vec<f64>,
    /// Scales per octave inside the fit range.
    pub per_octave: u32,
    /// Factor applied to the fractional kernel spectrum (1 in normal runs;
    /// anything else is a fault injection).
    pub kernel_scale: f64,
    /// Weight of the Dirac part of the discretized fractional kernel.
    pub dirac_weight: DiracWeight,
    /// Run the theory self-consistency and oracle equivalence checks.
    pub include_numerics: bool,
}

impl VerifyPlan {
    /// `N = 2^21`, `T_tot = 1`, `T = 2^-7`, `ε = 4Δt`, ten trajectories per
    /// cell, `H ∈ {1/3, 1/2, 2/3}`, `γ² ∈ {0, 0.02, 0.04}`.
    pub fn desk(seed: u64) -> Self {
        Self {
            n_points: 1 << 21,
            t_tot: 1.0,
            t_large: 1.0 / 128.0,
            epsilon_dt_multiple: 4.0,
            seed,
            n_traj: 10,
            hursts: vec![1.0 / 3.0, 0.5, 2.0 / 3.0],
            gamma_sqs: vec![0.0, 0.02, 0.04],
            per_octave: 2,
            kernel_scale: 1.0,
            dirac_weight: DiracWeight::default(),
            include_numerics: true,
        }
    }

    pub fn dt(&self) -> f64 {
        self.t_tot / self.n_points as f64
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon_dt_multiple * self.dt()
    }

    pub fn cell_config(&self, hurst: f64, gamma_sq: f64) -> SimConfig {
        SimConfig {
            n_points: self.n_points,
            t_tot: self.t_tot,
            t_large: self.t_large,
            epsilon: self.epsilon(),
            hurst,
            gamma_sq,
            seed: self.seed,
            n_traj: self.n_traj,
        }
    }

    /// Inertial fit range `[8ε, T/16]`.
    pub fn fit_range(&self) -> (f64, f64) {
        (8.0 * self.epsilon(), self.t_large / 16.0)
    }

    pub fn fit_scales(&self) -> Result<Vec<f64>> {
        let (lo, hi) = self.fit_range();
        scale_grid(self.dt(), lo, hi, self.per_octave)
    }

    /// Octave lags `τ` of the base-field check, `[8ε, T/32]`, plus their
    /// doubles.
    pub fn log_correlation_lags(&self) -> Result<Vec<f64>> {
        let (lo, hi) = self.fit_range();
        scale_grid(self.dt(), lo, hi, 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

impl CheckStatus {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Self::Pass
        } else {
            Self::Fail
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Pass => "PASS",
            Self::Fail => "FAIL",
            Self::Skipped => "SKIP",
        }
    }
}

/// One comparison of the suite.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRecord {
    pub criterion: u8,
    pub name: String,
    /// The property being tested, in words.
    pub law: &'static str,
    pub hurst: Option<f64>,
    pub gamma_sq: Option<f64>,
    pub empirical: f64,
    pub theoretical: f64,
    pub tolerance: f64,
    pub status: CheckStatus,
}

/// Fits and tables of one `(H, γ²)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub hurst: f64,
    pub gamma_sq: f64,
    pub table: MomentTable,
    pub s2_fit: FitResult,
    /// `exp(mean ln(S₂/prediction))` over the fit scales.
    pub s2_amplitude_ratio: f64,
    pub flatness_fit: Option<FitResult>,
    pub variance: f64,
    pub chaos_second_moment: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub plan: VerifyPlan,
    pub checks: Vec<CheckRecord>,
    pub cells: Vec<CellResult>,
    /// Set when a stage failed and the suite stopped early.
    pub aborted: Option<String>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.aborted.is_none() && self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    /// `Some(true)` if every non-skipped check of the criterion passed,
    /// `None` if the criterion has no evaluated check.
    pub fn criterion_passed(&self, criterion: u8) -> Option<bool> {
        let evaluated: Vec<_> = self
            .checks
            .iter()
            .filter(|c| c.criterion == criterion && c.status != CheckStatus::Skipped)
            .collect();
        if evaluated.is_empty() {
            None
        } else {
            Some(evaluated.iter().all(|c| c.status == CheckStatus::Pass))
        }
    }

    pub fn failures(&self) -> Vec<&CheckRecord> {
        self.checks.iter().filter(|c| c.status == CheckStatus::Fail).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("criterion,name,hurst,gamma_sq,empirical,theoretical,tolerance,status\n");
        for c in &self.checks {
            let _ = writeln!(
                s,
                "{},{},{},{},{:.10e},{:.10e},{:.4e},{}",
                c.criterion,
                c.name,
                fmt_opt(c.hurst),
                fmt_opt(c.gamma_sq),
                c.empirical,
                c.theoretical,
                c.tolerance,
                c.status.label()
            );
        }
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let p = &self.plan;
        let _ = writeln!(
            s,
            "verify: N = {}, T_tot = {}, T = {}, eps = {} dt, seed = {}, n_traj = {}, kernel scale = {}, dirac weight = {}",
            p.n_points,
            p.t_tot,
            p.t_large,
            p.epsilon_dt_multiple,
            p.seed,
            p.n_traj,
            p.kernel_scale,
            p.dirac_weight.name()
        );
        for c in &self.checks {
            let cell = match (c.hurst, c.gamma_sq) {
                (Some(h), Some(g)) => format!(" [H={h:.4} g2={g:.3}]"),
                (Some(h), None) => format!(" [H={h:.4}]"),
                _ => String::new(),
            };
            let _ = writeln!(
                s,
                "{} {:>2} {}{}: empirical {:.6e}, expected {:.6e}, tolerance {:.3e} ({})",
                c.status.label(),
                c.criterion,
                c.name,
                cell,
                c.empirical,
                c.theoretical,
                c.tolerance,
                c.law
            );
        }
        if let Some(why) = &self.aborted {
            let _ = writeln!(s, "ABORTED: {why}");
        }
        let _ = writeln!(s, "overall: {}", if self.passed() { "PASS" } else { "FAIL" });
        s
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

struct Suite {
    checks: Vec<CheckRecord>,
}

impl Suite {
    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        criterion: u8,
        name: &str,
        law: &'static str,
        cell: (Option<f64>, Option<f64>),
        empirical: f64,
        theoretical: f64,
        tolerance: f64,
        ok: bool,
    ) {
        self.checks.push(CheckRecord {
            criterion,
            name: name.to_string(),
            law,
            hurst: cell.0,
            gamma_sq: cell.1,
            empirical,
            theoretical,
            tolerance,
            status: CheckStatus::from_bool(ok && empirical.is_finite()),
        });
    }

    fn skip(&mut self, criterion: u8, name: &str, law: &'static str, cell: (Option<f64>, Option<f64>)) {
        self.checks.push(CheckRecord {
            criterion,
            name: name.to_string(),
            law,
            hurst: cell.0,
            gamma_sq: cell.1,
            empirical: f64::NAN,
            theoretical: f64::NAN,
            tolerance: f64::NAN,
            status: CheckStatus::Skipped,
        });
    }

    /// `|empirical - theoretical| ≤ tolerance`.
    #[allow(clippy::too_many_arguments)]
    fn abs(
        &mut self,
        criterion: u8,
        name: &str,
        law: &'static str,
        cell: (Option<f64>, Option<f64>),
        empirical: f64,
        theoretical: f64,
        tolerance: f64,
    ) {
        let ok = (empirical - theoretical).abs() <= tolerance;
        self.push(criterion, name, law, cell, empirical, theoretical, tolerance, ok);
    }

    /// `|empirical/theoretical - 1| ≤ tolerance`.
    #[allow(clippy::too_many_arguments)]
    fn rel(
        &mut self,
        criterion: u8,
        name: &str,
        law: &'static str,
        cell: (Option<f64>, Option<f64>),
        empirical: f64,
        theoretical: f64,
        tolerance: f64,
    ) {
        let ok = (empirical / theoretical - 1.0).abs() <= tolerance;
        self.push(criterion, name, law, cell, empirical, theoretical, tolerance, ok);
    }
}

/// Summaries kept per trajectory; the paths themselves are dropped.
struct TrajectorySummary {
    table: MomentTable,
    base_table: Option<MomentTable>,
    mean_square: f64,
    chaos_second_moment: f64,
}

fn mean_square(values: &[f64]) -> f64 {
    let acc: NeumaierSum = values.iter().map(|v| v * v).collect();
    acc.value() / values.len() as f64
}

const ORDERS: [u32; 3] = [2, 3, 4];

struct CellData {
    result: CellResult,
    base_table: Option<MomentTable>,
}

fn run_cell(plan: &VerifyPlan, hurst: f64, gamma_sq: f64, with_base: bool) -> Result<CellData> {
    let cfg = plan.cell_config(hurst, gamma_sq);
    let synth = Synthesizer::with_dirac_weight(&cfg, plan.dirac_weight)?.with_kernel_scale(plan.kernel_scale);
    let scales = plan.fit_scales()?;
    let base_scales: Vec<f64> = {
        let lags = plan.log_correlation_lags()?;
        let mut all: Vec<f64> = lags.iter().flat_map(|&t| [t, 2.0 * t]).collect();
        all.sort_by(f64::total_cmp);
        all.dedup();
        all
    };
    let summaries = (0..plan.n_traj)
        .into_par_iter()
        .map(|i| -> Result<TrajectorySummary> {
            let b = synth.bundle(i)?;
            let base_table = if with_base {
                Some(path_structure_function(&b.x_tilde, &[2], &base_scales)?)
            } else {
                None
            };
            let m2: NeumaierSum = b.m.values.iter().map(|v| v * v).collect();
            Ok(TrajectorySummary {
                table: path_structure_function(&b.x, &ORDERS, &scales)?,
                base_table,
                mean_square: mean_square(&b.x.values),
                chaos_second_moment: m2.value() / b.m.values.len() as f64,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let tables: Vec<MomentTable> = summaries.iter().map(|s| s.table.clone()).collect();
    let table = MomentTable::average(&tables)?;
    let base_table = if with_base {
        let t: Vec<MomentTable> = summaries.iter().filter_map(|s| s.base_table.clone()).collect();
        Some(MomentTable::average(&t)?)
    } else {
        None
    };
    let variance = compensated_mean(&summaries.iter().map(|s| s.mean_square).collect::<Vec<_>>());
    let chaos_second_moment =
        compensated_mean(&summaries.iter().map(|s| s.chaos_second_moment).collect::<Vec<_>>());

    let fit_range = plan.fit_range();
    let s2 = &table.s_n[&2];
    let s2_fit = fit_series(&table.scales, s2, fit_range)?;
    let c2 = theory::c2(hurst, plan.t_large)?;
    let log_ratios: Vec<f64> = table
        .scales
        .iter()
        .zip(s2)
        .map(|(&tau, &v)| (v / (c2 * (tau / plan.t_large).powf(2.0 * hurst))).ln())
        .collect();
    let s2_amplitude_ratio = compensated_mean(&log_ratios).exp();
    let flatness_fit = match &table.flatness {
        Some(f) => Some(fit_series(&table.scales, f, fit_range)?),
        None => None,
    };
    Ok(CellData {
        result: CellResult {
            hurst,
            gamma_sq,
            table,
            s2_fit,
            s2_amplitude_ratio,
            flatness_fit,
            variance,
            chaos_second_moment,
        },
        base_table,
    })
}

const LAW_S2: &str = "second-order structure function scaling";
const LAW_VAR: &str = "fOU variance";
const LAW_FLAT0: &str = "Gaussian flatness";
const LAW_FLAT: &str = "multifractal flatness law";
const LAW_LOG: &str = "logarithmic covariance of the base field";
const LAW_CHAOS: &str = "unit second moment of the chaos";
const LAW_THEORY: &str = "theory self-consistency";
const LAW_ORACLE: &str = "oracle equivalence";
const LAW_SYM: &str = "symmetric increment distribution";

fn cell_checks(suite: &mut Suite, plan: &VerifyPlan, cell: &CellResult) -> Result<()> {
    let (h, g2) = (cell.hurst, cell.gamma_sq);
    let at = (Some(h), Some(g2));
    suite.abs(1, "s2_exponent", LAW_S2, at, cell.s2_fit.exponent, 2.0 * h, 0.05);
    suite.abs(1, "s2_amplitude_ratio", LAW_S2, at, cell.s2_amplitude_ratio, 1.0, 0.10);

    if g2 == 0.0 {
        let theory_var = theory::fou_variance(h, plan.t_large)?;
        suite.rel(2, "variance", LAW_VAR, at, cell.variance, theory_var, 0.05);
        match &cell.table.flatness {
            Some(f) => {
                let worst = f.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
                suite.abs(3, "flatness_max_deviation", LAW_FLAT0, at, 1.0 + worst, 1.0, 0.10);
            }
            None => suite.push(3, "flatness_max_deviation", LAW_FLAT0, at, f64::NAN, 1.0, 0.10, false),
        }
        suite.skip(4, "flatness_exponent", LAW_FLAT, at);
        suite.skip(4, "flatness_amplitude_ratio", LAW_FLAT, at);
        suite.skip(6, "chaos_second_moment", LAW_CHAOS, at);
    } else {
        suite.skip(2, "variance", LAW_VAR, at);
        suite.skip(3, "flatness_max_deviation", LAW_FLAT0, at);
        match (&cell.flatness_fit, &cell.table.flatness) {
            (Some(fit), Some(f)) => {
                suite.abs(4, "flatness_exponent", LAW_FLAT, at, fit.exponent, -4.0 * g2, 0.05);
                let amp = theory::flatness_amplitude(h, g2, plan.t_large)?.value;
                let logs: Vec<f64> = cell
                    .table
                    .scales
                    .iter()
                    .zip(f)
                    .map(|(&tau, &v)| (v / (amp * (tau / plan.t_large).powf(-4.0 * g2))).ln())
                    .collect();
                suite.abs(4, "flatness_amplitude_ratio", LAW_FLAT, at, compensated_mean(&logs).exp(), 1.0, 0.20);
            }
            _ => {
                suite.push(4, "flatness_exponent", LAW_FLAT, at, f64::NAN, -4.0 * g2, 0.05, false);
            }
        }
        suite.abs(6, "chaos_second_moment", LAW_CHAOS, at, cell.chaos_second_moment, 1.0, 0.10);
    }

    let s2 = &cell.table.s_n[&2];
    let s3 = &cell.table.s_n[&3];
    let worst = s2
        .iter()
        .zip(s3)
        .map(|(a, b)| b.abs() / a.powf(1.5))
        .fold(0.0, f64::max);
    suite.push(9, "normalized_s3_max", LAW_SYM, at, worst, 0.0, 0.10, worst < 0.10);
    Ok(())
}

fn gamma_independence(suite: &mut Suite, cells: &[CellResult], hursts: &[f64]) {
    for &h in hursts {
        let amps: Vec<f64> = cells
            .iter()
            .filter(|c| c.hurst == h)
            .map(|c| c.s2_amplitude_ratio)
            .collect();
        if amps.len() < 2 {
            continue;
        }
        let max = amps.iter().copied().fold(f64::MIN, f64::max);
        let min = amps.iter().copied().fold(f64::MAX, f64::min);
        let spread = max / min - 1.0;
        suite.push(1, "s2_gamma_independence", LAW_S2, (Some(h), None), spread, 0.0, 0.05, spread < 0.05);
    }
}

fn log_correlation_checks(suite: &mut Suite, plan: &VerifyPlan, base: &MomentTable) -> Result<()> {
    let dt = plan.dt();
    let s2 = &base.s_n[&2];
    let find = |tau: f64| -> Result<f64> {
        base.scales
            .iter()
            .position(|&t| (t / dt).round() == (tau / dt).round())
            .map(|i| s2[i])
            .ok_or_else(|| crate::MfouError::Domain(format!("missing base-field scale {tau}")))
    };
    let ln2 = 2f64.ln();
    for tau in plan.log_correlation_lags()? {
        if 2.0 * tau > plan.fit_range().1 * (1.0 + 1e-9) {
            continue;
        }
        // S₂(τ) = 2(C(0) - C(τ))
        let diff = 0.5 * (find(2.0 * tau)? - find(tau)?);
        let name = format!("covariance_difference_lag_{}", (tau / dt).round() as u64);
        suite.rel(5, &name, LAW_LOG, (None, None), diff, ln2, 0.10);
    }
    Ok(())
}

fn theory_checks(suite: &mut Suite, plan: &VerifyPlan) -> Result<()> {
    let t = plan.t_large;
    for &h in &plan.hursts {
        let q = theory::fou_covariance_time(h, t, 0.0)?;
        suite.rel(7, "covariance_at_zero_vs_variance", LAW_THEORY, (Some(h), None), q.value, theory::fou_variance(h, t)?, 1e-6);
    }
    for &h in &plan.hursts {
        for frac in [0.1, 0.5, 1.0] {
            let a = theory::fou_covariance_time(h, t, frac * t)?;
            let b = theory::fou_covariance_spectral(h, t, frac * t)?;
            let tol = (1e-4 * t.powf(2.0 * h)).max(a.error + b.error);
            let name = format!("time_vs_spectral_covariance_tau_{frac}T");
            suite.abs(7, &name, LAW_THEORY, (Some(h), None), a.value, b.value, tol);
        }
    }
    suite.abs(7, "g_at_zero", LAW_THEORY, (None, None), theory::g_at_zero()?, -0.577216, 1e-5);
    let c4 = theory::c2n_quadrature(0.5, 0.04, 2, 1.0)?.value;
    suite.rel(7, "c4_quadrature_vs_closed_form", LAW_THEORY, (Some(0.5), Some(0.04)), c4, theory::c4_half_closed(0.04, 1.0)?, 1e-3);
    for &h in &plan.hursts {
        let c2 = theory::c2(h, 1.0)?;
        let q = theory::c2n_quadrature(h, 0.0, 2, 1.0)?.value;
        suite.rel(7, "gaussian_factorization_c4", LAW_THEORY, (Some(h), Some(0.0)), q, c2 * c2, 1e-3);
    }
    Ok(())
}

fn oracle_checks(suite: &mut Suite, seed: u64) -> Result<()> {
    let mut worst_dft = 0.0f64;
    let mut worst_conv = 0.0f64;
    let mut n = 2;
    while n <= 64 {
        let x = gaussian_increments(seed, n as u64, 0, n, 1.0);
        let y = gaussian_increments(seed, n as u64, 1, n, 1.0);
        let fast = dft(&x)?;
        let slow = naive_dft(&x);
        for (a, b) in fast.coeffs.iter().zip(&slow) {
            worst_dft = worst_dft.max((a - b).norm());
        }
        let back = idft(&fast)?;
        for (a, b) in back.iter().zip(naive_idft(&slow)) {
            worst_dft = worst_dft.max((a - b).abs());
        }
        for (a, b) in circular_convolve(&x, &y)?.iter().zip(naive_circular_convolve(&x, &y)) {
            worst_conv = worst_conv.max((a - b).abs());
        }
        n *= 2;
    }
    suite.push(8, "dft_vs_naive_max_error", LAW_ORACLE, (None, None), worst_dft, 0.0, 1e-10, worst_dft <= 1e-10);
    suite.push(8, "convolution_vs_naive_max_error", LAW_ORACLE, (None, None), worst_conv, 0.0, 1e-10, worst_conv <= 1e-10);

    let mut cfg = SimConfig::desk(0.5, 0.0, seed);
    cfg.n_points = 1024;
    cfg.epsilon = 4.0 / 1024.0;
    cfg.n_traj = 2;
    let synth = Synthesizer::new(&cfg)?;
    let paths: Vec<SampledPath> = (0..2).map(|i| synth.bundle(i).map(|b| b.x)).collect::<Result<_>>()?;
    let scales = scale_grid(cfg.dt(), cfg.dt(), 256.0 * cfg.dt(), 2)?;
    let fast = structure_function(&paths, &ORDERS, &scales)?;
    let slow = brute_structure_function(&paths, &ORDERS, &scales)?;
    let mut worst = 0.0f64;
    for n in ORDERS {
        for (i, (a, b)) in fast.s_n[&n].iter().zip(&slow[&n]).enumerate() {
            let size = slow[&2][i].powf(n as f64 / 2.0);
            worst = worst.max((a - b).abs() / size);
        }
    }
    suite.push(8, "structure_function_vs_brute_force", LAW_ORACLE, (None, None), worst, 0.0, 1e-12, worst <= 1e-12);
    Ok(())
}

fn check_plan(plan: &VerifyPlan) -> Result<()> {
    if plan.hursts.is_empty() || plan.gamma_sqs.is_empty() {
        return domain("the plan needs at least one H and one gamma_sq");
    }
    for &h in &plan.hursts {
        for &g in &plan.gamma_sqs {
            plan.cell_config(h, g).check()?;
        }
    }
    plan.fit_scales()?;
    Ok(())
}

/// Runs the whole suite. Stage failures stop the run and are reported in
/// [`VerifyReport::aborted`] together with the checks evaluated so far.
pub fn run_verify(plan: &VerifyPlan) -> VerifyReport {
    let mut suite = Suite { checks: Vec::new() };
    let mut cells = Vec::new();
    let outcome = (|| -> Result<()> {
        check_plan(plan)?;
        let mut base_done = false;
        for &h in &plan.hursts {
            for &g2 in &plan.gamma_sqs {
                let data = run_cell(plan, h, g2, !base_done)?;
                cell_checks(&mut suite, plan, &data.result)?;
                if let Some(base) = &data.base_table {
                    log_correlation_checks(&mut suite, plan, base)?;
                    base_done = true;
                }
                cells.push(data.result);
            }
        }
        gamma_independence(&mut suite, &cells, &plan.hursts);
        if plan.include_numerics {
            theory_checks(&mut suite, plan)?;
            oracle_checks(&mut suite, plan.seed)?;
        }
        Ok(())
    })();
    let mut checks = suite.checks;
    // stable order: by criterion, then in evaluation order
    checks.sort_by_key(|c| c.criterion);
    VerifyReport {
        plan: plan.clone(),
        checks,
        cells,
        aborted: outcome.err().map(|e| e.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_plan() -> VerifyPlan {
        VerifyPlan {
            n_points: 1 << 16,
            t_tot: 1.0,
            t_large: 1.0 / 16.0,
            epsilon_dt_multiple: 4.0,
            seed: 7,
            n_traj: 2,
            hursts: vec![0.5],
            gamma_sqs: vec![0.0, 0.04],
            per_octave: 2,
            kernel_scale: 1.0,
            dirac_weight: DiracWeight::default(),
            include_numerics: false,
        }
    }

    #[test]
    fn plan_geometry() {
        let p = VerifyPlan::desk(1);
        let (lo, hi) = p.fit_range();
        assert_eq!(lo, 32.0 * p.dt());
        assert_eq!(hi, 1024.0 * p.dt());
        assert_eq!(p.fit_scales().unwrap().len(), 11);
        assert_eq!(p.log_correlation_lags().unwrap().len(), 6);
    }

    #[test]
    fn small_run_is_reproducible_and_complete() {
        let plan = small_plan();
        let a = run_verify(&plan);
        assert!(a.aborted.is_none(), "{:?}", a.aborted);
        let b = run_verify(&plan);
        assert_eq!(a.to_text(), b.to_text());
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.cells.len(), 2);
        // Gaussian cell: multifractal checks skipped, constancy evaluated
        let gaussian: Vec<_> = a.checks.iter().filter(|c| c.gamma_sq == Some(0.0)).collect();
        assert!(gaussian.iter().any(|c| c.criterion == 3 && c.status != CheckStatus::Skipped));
        assert!(gaussian.iter().filter(|c| c.criterion == 4).all(|c| c.status == CheckStatus::Skipped));
        assert!(a.criterion_passed(10).is_none());
    }

    #[test]
    fn invalid_plan_aborts() {
        let mut plan = small_plan();
        plan.hursts = vec![1.5];
        let r = run_verify(&plan);
        assert!(r.aborted.is_some());
        assert!(!r.passed());
        assert!(r.to_text().contains("ABORTED"));
    }
}
