//! `mfou`: synthesis, theory, analysis and verification of multifractal
//! fractional Ornstein-Uhlenbeck processes.
//!
//! Exit status: 0 on success, 1 when a run completed but a check (or a
//! requested order) failed, 2 on errors.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{AnalyzeOptions, Outcome, VerifyOptions};
use config::{ConfigArgs, ScaleSpec};

#[derive(Debug, Parser)]
#[command(name = "mfou", version, about = "MfOU synthesis, theory and verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize an ensemble of trajectories with a manifest.
    Synth {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory.
        #[arg(long, default_value = "mfou_out")]
        out: PathBuf,
        /// Also write each trajectory as CSV.
        #[arg(long)]
        csv: bool,
    },
    /// Evaluate the theoretical predictions for one parameter set.
    Theory {
        #[command(flatten)]
        config: ConfigArgs,
        /// Even moment orders.
        #[arg(long, value_delimiter = ',', default_value = "2,4,6")]
        orders: Vec<u32>,
        /// Directory for theory.csv and theory_summary.txt.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Structure functions, flatness and increment histograms of stored
    /// trajectories.
    Analyze {
        /// Trajectory files or directories holding them.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// `min:max:per-octave` in time units, or with a `dt` suffix in
        /// steps (e.g. `1dt:1024dt:2`). Defaults to octaves over [dt, T_tot/4].
        #[arg(long)]
        scales: Option<ScaleSpec>,
        /// Moment orders of |increment|.
        #[arg(long, value_delimiter = ',', default_value = "2,3,4")]
        orders: Vec<u32>,
        /// Histogram bins per scale.
        #[arg(long, default_value_t = 200)]
        bins: usize,
        /// Output directory.
        #[arg(long, default_value = "mfou_analysis")]
        out: PathBuf,
        /// Cross-check against a brute-force double loop (small N only).
        #[arg(long)]
        oracle: bool,
    },
    /// Run the full comparison of synthesized ensembles with the theory.
    Verify {
        #[command(flatten)]
        config: ConfigArgs,
        /// Directory for the report and per-cell CSV files.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Skip the theory self-consistency and oracle checks.
        #[arg(long)]
        skip_numerics: bool,
        /// Fault injection: multiplies the fractional kernel spectrum.
        #[arg(long, default_value_t = 1.0, hide = true)]
        kernel_scale: f64,
    },
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    match cli.command {
        Command::Synth { config, out, csv } => commands::synth(&config, &out, csv),
        Command::Theory { config, orders, out } => commands::theory(&config, &orders, out.as_deref()),
        Command::Analyze {
            inputs,
            scales,
            orders,
            bins,
            out,
            oracle,
        } => commands::analyze(&AnalyzeOptions {
            inputs: &inputs,
            scales,
            orders: &orders,
            bins,
            out: &out,
            oracle,
        }),
        Command::Verify {
            config,
            out,
            skip_numerics,
            kernel_scale,
        } => commands::verify(
            &config,
            &VerifyOptions {
                out: out.as_deref(),
                kernel_scale,
                skip_numerics,
            },
        ),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
