//! Command-line driver: heat generation, optimization, one-shot analysis,
//! transient verification and weight sweeps.

pub mod pipeline;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::info;

use packtopo::config::{load_config, RunConfig};
use packtopo::error::{Error, Result};
use packtopo::io;

use pipeline::{Problem, DEFAULT_WEIGHTS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "packtopo", version, about = "Thermo-structural topology optimization of battery-pack enclosures")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    /// Output directory, overriding `output.directory`.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Heat generation series from the power profile.
    Heatgen {
        #[command(flatten)]
        common: Common,
    },
    /// Full optimization loop.
    Optimize {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        max_iter: Option<usize>,
        /// Structural weight.
        #[arg(long, allow_negative_numbers = true)]
        k: Option<f64>,
    },
    /// Steady coupled analysis of a saved design.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Field file holding a nodal `phi` array.
        #[arg(long)]
        phi: PathBuf,
    },
    /// Transient temperature history of a saved design.
    Transient {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        phi: PathBuf,
        /// Heat series CSV (`t,Q` or `t,Q,I,V,soc`); generated when omitted.
        #[arg(long)]
        heat: Option<PathBuf>,
    },
    /// Optimizes a list of weights and summarizes the trade-off.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated weights.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        k: Option<Vec<f64>>,
        #[arg(long)]
        max_iter: Option<usize>,
    },
}

/// Exit code for an error from the library.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::Io { .. } | Error::Parse { .. } | Error::InfeasiblePower { .. } => EXIT_CONFIG,
        Error::SolverDivergence { .. } | Error::Singular(_) | Error::Cfl { .. } | Error::Precondition(_) => EXIT_SOLVER,
    }
}

fn load(common: &Common) -> Result<(RunConfig, PathBuf)> {
    let config = match &common.config {
        Some(p) => load_config(p)?,
        None => RunConfig::default(),
    };
    let out = common.out.clone().unwrap_or_else(|| config.output.directory.clone());
    Ok((config, out))
}

fn check_weight(k: f64) -> Result<()> {
    if (0.0..=1.0).contains(&k) {
        Ok(())
    } else {
        Err(Error::Config {
            key: "optimizer.k".into(),
            message: format!("must lie in [0, 1], got {k}"),
        })
    }
}

fn analysis_summary(path: &Path, rows: &[(&str, f64)]) -> Result<()> {
    let mut text = rows.iter().map(|r| r.0).collect::<Vec<_>>().join(",");
    text.push('\n');
    text.push_str(&rows.iter().map(|r| r.1.to_string()).collect::<Vec<_>>().join(","));
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Executes a parsed command.
pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Heatgen { common } => {
            let (config, out) = load(&common)?;
            let problem = Problem::new(config)?;
            let series = problem.heat_series()?;
            pipeline::ensure_dir(&out)?;
            io::write_heat_series(&out.join("heat.csv"), &series)?;
            info!("worst-case rate {:.6e} W/m³ over {} samples", series.worst, series.samples.len());
        }
        Command::Optimize { common, max_iter, k } => {
            let (mut config, out) = load(&common)?;
            if let Some(n) = max_iter {
                config.optimizer.max_iterations = n;
            }
            if let Some(k) = k {
                check_weight(k)?;
                config.optimizer.k = k;
            }
            let problem = Problem::new(config)?;
            let series = problem.heat_series()?;
            let summary = pipeline::optimize(&problem, &series, &out)?;
            info!(
                "{} iterations, converged: {}",
                summary.outcome.records.len(),
                summary.outcome.converged
            );
        }
        Command::Analyze { common, phi } => {
            let (config, out) = load(&common)?;
            let problem = Problem::new(config)?;
            let series = problem.heat_series()?;
            let phi = problem.read_design(&phi)?;
            let state = problem.design_state(&phi);
            let analysis = problem.physics(&series).analyze(&state, None)?;
            pipeline::ensure_dir(&out)?;
            let snap = pipeline::design_snapshot(&problem.grid, &phi, &state, Some(&analysis))?;
            io::write_vtk(&snap, &out.join("analysis.vtk"))?;
            analysis_summary(
                &out.join("analysis.csv"),
                &[
                    ("C_S", analysis.structural_compliance()),
                    ("C_T", analysis.thermal_compliance()),
                    ("volfrac", state.volume_fraction(&problem.grid, &problem.regions)),
                    ("max_disp", analysis.displacement.max_displacement()),
                    ("max_T", analysis.temperature.max_temperature()),
                ],
            )?;
        }
        Command::Transient { common, phi, heat } => {
            let (config, out) = load(&common)?;
            let problem = Problem::new(config)?;
            let series = match heat {
                Some(p) => io::read_any_heat(&p)?,
                None => problem.heat_series()?,
            };
            let phi = problem.read_design(&phi)?;
            let state = problem.design_state(&phi);
            let history = problem.transient(&state, &series)?;
            pipeline::ensure_dir(&out)?;
            io::write_history(&out.join("history.csv"), &history)?;
            for (i, (t, field)) in history.snapshots.iter().enumerate() {
                let snap = io::FieldSnapshot::new(&problem.grid)
                    .with_point("T", io::FieldData::Scalars(field.clone()))?;
                io::write_vtk(&snap, &out.join(format!("transient_{i:03}.vtk")))?;
                info!("snapshot {i} at t = {t} s");
            }
            info!("peak temperature {:.4} K", history.peak());
        }
        Command::Sweep { common, k, max_iter } => {
            let (mut config, out) = load(&common)?;
            if let Some(n) = max_iter {
                config.optimizer.max_iterations = n;
            }
            let weights = k.unwrap_or_else(|| DEFAULT_WEIGHTS.to_vec());
            for &w in &weights {
                check_weight(w)?;
            }
            let problem = Problem::new(config)?;
            let series = problem.heat_series()?;
            let rows = pipeline::sweep(&problem, &series, &weights, &out)?;
            info!("sweep wrote {} Pareto rows", rows.len());
        }
    }
    Ok(())
}

/// Parses `args` (program name first) and runs; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
