use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use mfou::io::{self, Manifest, TrajectoryHeader};
use mfou::oracle::brute_structure_function;
use mfou::stats::{default_scales, pdf_histograms, scale_grid, structure_function};
use mfou::theory::{self, theory_report};
use mfou::verify::run_verify;
use mfou::{SampledPath, SimConfig, Synthesizer};

use crate::config::{ConfigArgs, ScaleSpec};

/// Outcome of a subcommand that completed without error.
pub enum Outcome {
    Success,
    /// Ran to completion, but a reported check or requested item failed.
    Failed,
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

pub fn trajectory_file_name(index: usize) -> String {
    format!("traj_{index:04}.bin")
}

pub fn synth(args: &ConfigArgs, out: &Path, csv: bool) -> Result<Outcome> {
    let cfg = args.sim_config()?;
    create_dir(out)?;
    eprintln!(
        "synth: N = {}, H = {}, gamma^2 = {}, {} trajectories, seed {}",
        cfg.n_points, cfg.hurst, cfg.gamma_sq, cfg.n_traj, cfg.seed
    );
    let synth = Synthesizer::with_dirac_weight(&cfg, args.dirac_weight)?;
    let mut files = Vec::with_capacity(cfg.n_traj);
    let mut mean_squares = Vec::with_capacity(cfg.n_traj);
    let mut chaos_moments = Vec::with_capacity(cfg.n_traj);
    for i in 0..cfg.n_traj {
        let b = synth.bundle(i)?;
        let name = trajectory_file_name(i);
        let header = TrajectoryHeader::for_path(&b.x, i as u64);
        let bytes = io::encode_trajectory(&header, &b.x.values);
        let path = out.join(&name);
        fs::write(&path, &bytes).with_context(|| format!("writing {}", path.display()))?;
        files.push((name, io::sha256_hex(&bytes)));
        if csv {
            write(&out.join(format!("traj_{i:04}.csv")), &io::trajectory_csv(&b.x))?;
        }
        mean_squares.push(b.x.values.iter().map(|v| v * v).sum::<f64>() / b.x.len() as f64);
        chaos_moments.push(b.m.values.iter().map(|v| v * v).sum::<f64>() / b.m.values.len() as f64);
        eprintln!("synth: wrote {}", path.display());
    }
    let n = cfg.n_traj as f64;
    let variance = mean_squares.iter().sum::<f64>() / n;
    let predicted = theory::fou_variance(cfg.hurst, cfg.t_large)?;
    let manifest = Manifest {
        config: cfg.clone(),
        files,
        summary: vec![
            ("ensemble_variance".into(), variance),
            ("theory_variance".into(), predicted),
            ("variance_ratio".into(), variance / predicted),
            ("chaos_second_moment".into(), chaos_moments.iter().sum::<f64>() / n),
        ],
    };
    manifest.write(out)?;
    println!("{}", manifest.to_text().trim_end());
    Ok(Outcome::Success)
}

/// Default lags at which the covariance is tabulated.
fn default_taus(t_large: f64) -> Vec<f64> {
    [0.0, 0.1, 0.5, 1.0, 2.0].iter().map(|f| f * t_large).collect()
}

pub fn theory(args: &ConfigArgs, orders: &[u32], out: Option<&Path>) -> Result<Outcome> {
    let cfg = args.sim_config()?;
    let report = theory_report(&cfg, orders, &default_taus(cfg.t_large))?;
    let summary = report.summary();
    print!("{summary}");
    if let Some(dir) = out {
        create_dir(dir)?;
        write(&dir.join("theory.csv"), &report.to_csv())?;
        write(&dir.join("theory_summary.txt"), &summary)?;
    }
    for (order, why) in &report.rejected_orders {
        eprintln!("theory: order {order} rejected: {why}");
    }
    Ok(if report.rejected_orders.is_empty() {
        Outcome::Success
    } else {
        Outcome::Failed
    })
}

/// Expands directories to the trajectory files they contain.
fn collect_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .with_context(|| format!("listing {}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "bin"))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    if files.is_empty() {
        bail!("no trajectory files given");
    }
    Ok(files)
}

/// The run configuration: from a manifest next to the first file when it
/// matches the headers, otherwise rebuilt from the header with desk-scale
/// values for the fields the binary format does not carry.
fn config_for(header: &TrajectoryHeader, first: &Path) -> SimConfig {
    let dir = first.parent().unwrap_or(Path::new("."));
    if let Ok(m) = Manifest::read(dir) {
        let c = m.config;
        if c.n_points as u64 == header.n_points
            && c.dt() == header.dt
            && c.hurst == header.hurst
            && c.gamma_sq == header.gamma_sq
            && c.seed == header.seed
        {
            return c;
        }
    }
    let t_tot = header.dt * header.n_points as f64;
    SimConfig {
        n_points: header.n_points as usize,
        t_tot,
        t_large: t_tot / 128.0,
        epsilon: 4.0 * header.dt,
        hurst: header.hurst,
        gamma_sq: header.gamma_sq,
        seed: header.seed,
        n_traj: 0,
    }
}

fn load_paths(files: &[PathBuf]) -> Result<Vec<SampledPath>> {
    let mut headers = Vec::with_capacity(files.len());
    let mut bodies = Vec::with_capacity(files.len());
    for f in files {
        let (h, v) = io::read_trajectory(f)?;
        if let Some(first) = headers.first() {
            if !h.same_run(first) {
                bail!(
                    "mixed configurations: {} does not belong to the run of {}",
                    f.display(),
                    files[0].display()
                );
            }
        }
        headers.push(h);
        bodies.push(v);
    }
    let mut cfg = config_for(&headers[0], &files[0]);
    cfg.n_traj = files.len();
    let meta = Arc::new(cfg);
    bodies
        .into_iter()
        .map(|v| SampledPath::new(v, meta.clone()).map_err(Into::into))
        .collect()
}

pub struct AnalyzeOptions<'a> {
    pub inputs: &'a [PathBuf],
    pub scales: Option<ScaleSpec>,
    pub orders: &'a [u32],
    pub bins: usize,
    pub out: &'a Path,
    pub oracle: bool,
}

/// Largest path length accepted by the brute-force cross-check.
const ORACLE_MAX_POINTS: usize = 4096;
const ORACLE_TOLERANCE: f64 = 1e-12;

pub fn analyze(opts: &AnalyzeOptions) -> Result<Outcome> {
    if opts.orders.is_empty() || opts.orders.contains(&0) {
        bail!("orders must be positive integers");
    }
    let files = collect_inputs(opts.inputs)?;
    let paths = load_paths(&files)?;
    let meta = paths[0].meta.clone();
    let dt = meta.dt();
    let scales = match opts.scales {
        Some(spec) => {
            let (lo, hi) = spec.range(dt);
            scale_grid(dt, lo, hi, spec.per_octave)?
        }
        None => default_scales(dt, meta.t_tot)?,
    };
    eprintln!("analyze: {} trajectories, {} scales", paths.len(), scales.len());
    create_dir(opts.out)?;
    let table = structure_function(&paths, opts.orders, &scales)?;
    write(&opts.out.join("moments.csv"), &io::moments_csv(&table))?;
    match io::flatness_csv(&table) {
        Some(csv) => write(&opts.out.join("flatness.csv"), &csv)?,
        None => eprintln!("analyze: warning: flatness omitted, it needs orders 2 and 4"),
    }
    let hist = pdf_histograms(&paths, &scales, opts.bins)?;
    write(&opts.out.join("histograms.csv"), &io::histograms_csv(&hist))?;

    if !opts.oracle {
        return Ok(Outcome::Success);
    }
    if meta.n_points > ORACLE_MAX_POINTS {
        bail!(
            "--oracle runs a quadratic brute-force scan and is limited to {ORACLE_MAX_POINTS} points, got {}",
            meta.n_points
        );
    }
    let brute = brute_structure_function(&paths, opts.orders, &scales)?;
    let mut worst = 0.0f64;
    for &n in opts.orders {
        for (i, (a, b)) in table.s_n[&n].iter().zip(&brute[&n]).enumerate() {
            // deviations are measured in units of the natural size of S_n
            let size = match table.s_n.get(&2) {
                Some(s2) => s2[i].powf(n as f64 / 2.0),
                None => b.abs().max(f64::MIN_POSITIVE),
            };
            worst = worst.max((a - b).abs() / size);
        }
    }
    let ok = worst <= ORACLE_TOLERANCE;
    println!(
        "oracle: max normalized deviation {worst:.3e} (tolerance {ORACLE_TOLERANCE:.0e}): {}",
        if ok { "PASS" } else { "FAIL" }
    );
    Ok(if ok { Outcome::Success } else { Outcome::Failed })
}

pub struct VerifyOptions<'a> {
    pub out: Option<&'a Path>,
    pub kernel_scale: f64,
    pub skip_numerics: bool,
}

pub fn verify(args: &ConfigArgs, opts: &VerifyOptions) -> Result<Outcome> {
    let mut plan = args.verify_plan()?;
    plan.kernel_scale = opts.kernel_scale;
    plan.include_numerics = !opts.skip_numerics;
    eprintln!(
        "verify: {} cells of {} trajectories, N = {}",
        plan.hursts.len() * plan.gamma_sqs.len(),
        plan.n_traj,
        plan.n_points
    );
    let report = run_verify(&plan);
    let text = report.to_text();
    print!("{text}");
    if let Some(dir) = opts.out {
        create_dir(dir)?;
        write(&dir.join("verify_report.txt"), &text)?;
        write(&dir.join("verify_report.csv"), &report.to_csv())?;
        let mut cells = String::from("hurst,gamma_sq,tau,order,value\n");
        for c in &report.cells {
            for (order, values) in &c.table.s_n {
                for (tau, v) in c.table.scales.iter().zip(values) {
                    cells.push_str(&format!("{},{},{tau},{order},{v}\n", c.hurst, c.gamma_sq));
                }
            }
        }
        write(&dir.join("verify_cells.csv"), &cells)?;
    }
    Ok(if report.passed() {
        Outcome::Success
    } else {
        Outcome::Failed
    })
}
