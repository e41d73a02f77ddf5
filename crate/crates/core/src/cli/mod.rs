//! Experiment driver behind the `thzcov` binary.

pub mod output;
pub mod presets;
pub mod runspec;
pub mod sweep;
pub mod units;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, ValueEnum};
use thiserror::Error;

pub use output::{emit_csv, read_csv, write_csv};
pub use presets::Preset;
pub use runspec::{load_runspec, parse_runspec, Backend, RunSpec, Scenario, SweepDim, SweepName};
pub use sweep::{run_sweep, ResultRow, SweepResult};

use crate::analytic::MomentMode;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CliError {
    #[error("{origin}: {message}")]
    Parse { origin: String, message: String },
    #[error("invalid run specification: {0}")]
    Validation(String),
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    /// 1 for bad input, 2 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Validation(_) => 1,
            CliError::Io { .. } | CliError::Runtime(_) => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Analytic,
    Mc,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Paper,
    Corrected,
}

#[derive(Debug, Clone, Parser)]
#[command(name = "thzcov", version, about = "Coverage of user-centric THz networks with beam misalignment")]
pub struct Args {
    /// TOML run file.
    #[arg(long, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub preset: Option<Preset>,
    #[arg(long, value_enum)]
    pub backend: Option<BackendArg>,
    /// Monte Carlo trials per grid point.
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// CSV destination; the manifest goes next to it with a .json extension.
    /// Without it the table is printed to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Analytic moment mode.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Reuse one seed across grid points (common random numbers).
    #[arg(long)]
    pub paired: bool,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

impl Args {
    /// Builds the run specification from the preset or file plus overrides.
    pub fn resolve(&self) -> Result<RunSpec, CliError> {
        let mut spec = match (&self.config, self.preset) {
            (Some(path), _) => load_runspec(path)?,
            (None, Some(p)) => p.spec(),
            (None, None) => RunSpec::default(),
        };
        if let Some(b) = self.backend {
            spec.backends = match b {
                BackendArg::Analytic => vec![Backend::Analytic],
                BackendArg::Mc => vec![Backend::Mc],
                BackendArg::Both => vec![Backend::Analytic, Backend::Mc],
            };
        }
        if let Some(t) = self.trials {
            spec.sim.n_trials = t;
        }
        if let Some(s) = self.seed {
            spec.sim.seed = s;
        }
        if let Some(m) = self.mode {
            spec.set_mode(match m {
                ModeArg::Paper => MomentMode::PaperFaithful,
                ModeArg::Corrected => MomentMode::CampbellCorrected,
            });
        }
        if self.paired {
            spec.paired = true;
        }
        if let Some(out) = &self.out {
            spec.output = Some(out.clone());
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// Runs a resolved specification and writes its outputs.
pub fn execute(spec: &RunSpec) -> Result<SweepResult, CliError> {
    let start = Instant::now();
    let result = run_sweep(spec)?;
    let wall = start.elapsed().as_secs_f64();
    match &spec.output {
        Some(path) => {
            emit_csv(&result.rows, path)?;
            output::write_manifest(spec, &result, wall, &output::manifest_path(path))?;
        }
        None => {
            let stdout = std::io::stdout();
            write_csv(&result.rows, stdout.lock()).map_err(|e| CliError::Runtime(e.to_string()))?;
        }
    }
    Ok(result)
}

/// Entry point shared by the binary; returns the process exit code.
pub fn main_with(args: Args) -> i32 {
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("thzcov: {e}");
            return 2;
        }
    }
    let spec = match args.resolve() {
        Ok(s) => s,
        Err(e) => {
            eprintln!("thzcov: {e}");
            return e.exit_code();
        }
    };
    match execute(&spec) {
        Ok(result) => {
            let failed = result.failures();
            if failed > 0 {
                eprintln!("thzcov: {failed} of {} rows failed; see the error column", result.rows.len());
                2
            } else {
                0
            }
        }
        Err(e) => {
            eprintln!("thzcov: {e}");
            e.exit_code()
        }
    }
}
