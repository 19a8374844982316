//! `lgsim`: Leggett-Garg scans, solvers and scenario reports.
//!
//! Every run prints exactly one JSON summary object to stdout (schema in
//! `schemas/summary.schema.json`); detailed artifacts go to files, written
//! atomically.  All angles are radians.

mod config;
mod output;
mod scenarios;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, ValueEnum};

use config::RunConfig;
use lgsim_core::threelevel::Objective;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Scenario {
    /// Grid scan of the three-level experiment; CSV artifact.
    ThreelevelScan,
    /// Trace the zero-signalling contours; JSON polyline artifact.
    ThreelevelContour,
    /// Maximize K_A or the weak-limit correlator under the zero-signalling
    /// constraint (or along a fixed-theta cut with --cut-theta).
    ThreelevelMaximize,
    /// Solve delta_A(A) = 0 for chi at one (phi, theta).
    ChiSolve,
    /// The ambiguous three-box experiment.
    Threebox,
    /// Grid scan summarized by the weak-limit maximum; CSV artifact.
    WeakScan,
    /// An arbitrary protocol described in the config file.
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ObjectiveArg {
    Ka,
    WeakK,
}

impl From<ObjectiveArg> for Objective {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::Ka => Objective::KA,
            ObjectiveArg::WeakK => Objective::WeakK,
        }
    }
}

/// Leggett-Garg correlators, signalling quantifiers and bounds under
/// ambiguous measurements.
#[derive(Debug, Parser)]
#[command(name = "lgsim", version, about)]
struct Cli {
    #[arg(value_enum)]
    scenario: Scenario,

    /// TOML configuration file; command-line flags override it.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Artifact path (CSV for scans, JSON otherwise).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Worker threads for grid scans (default: machine parallelism).
    #[arg(long)]
    workers: Option<usize>,

    /// Grid points per axis.
    #[arg(long)]
    resolution: Option<usize>,

    /// Weak-detector epsilon (custom scenario).
    #[arg(long)]
    epsilon: Option<f64>,

    /// phi in radians (chi-solve).
    #[arg(long)]
    phi: Option<f64>,

    /// theta in radians (chi-solve).
    #[arg(long)]
    theta: Option<f64>,

    /// chi-solver tolerance.
    #[arg(long)]
    chi_tol: Option<f64>,

    /// Maximization objective.
    #[arg(long, value_enum)]
    objective: Option<ObjectiveArg>,

    /// Maximize along this fixed-theta cut instead of the contours.
    #[arg(long)]
    cut_theta: Option<f64>,
}

fn merge(cli: &Cli) -> Result<RunConfig> {
    let mut config = RunConfig::load(cli.config.as_ref())?;
    if cli.out.is_some() {
        config.out = cli.out.clone();
    }
    macro_rules! override_flag {
        ($($field:ident),*) => {
            $(if cli.$field.is_some() { config.$field = cli.$field; })*
        };
    }
    override_flag!(workers, resolution, epsilon, phi, theta, chi_tol, cut_theta);
    if let Some(o) = cli.objective {
        config.objective = Some(o.into());
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: &Cli) -> Result<()> {
    let config = merge(cli)?;
    if let Some(n) = config.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot configure worker pool")?;
    }
    let summary = match cli.scenario {
        Scenario::ThreelevelScan => scenarios::threelevel_scan(&config, "threelevel-scan")?,
        Scenario::ThreelevelContour => scenarios::threelevel_contour(&config)?,
        Scenario::ThreelevelMaximize => scenarios::threelevel_maximize(&config)?,
        Scenario::ChiSolve => scenarios::chi_solve(&config)?,
        Scenario::Threebox => scenarios::threebox(&config)?,
        Scenario::WeakScan => scenarios::weak_scan(&config)?,
        Scenario::Custom => scenarios::custom(&config)?,
    };
    output::emit_summary(&summary)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
