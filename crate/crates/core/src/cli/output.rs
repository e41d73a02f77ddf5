//! CSV table and JSON run manifest.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use super::runspec::RunSpec;
use super::sweep::{PointWarning, ResultRow, SweepResult, Timing};
use super::CliError;

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// Header row for the result table.
pub fn csv_header() -> Vec<&'static str> {
    vec![
        "point",
        "backend",
        "gamma_db",
        "delta",
        "lambda_b",
        "n_b",
        "n_u",
        "theta_b_deg",
        "sigma_b_deg",
        "sigma_u_deg",
        "p_tx_dbm",
        "noise_dbm",
        "pathloss_exp",
        "absorption",
        "blockage_rate",
        "fading_shape",
        "fading_scale",
        "freq_hz",
        "mode",
        "trials",
        "seed",
        "coverage",
        "stderr",
        "coverage_conditioned",
        "error",
    ]
}

pub fn write_csv<W: Write>(rows: &[ResultRow], writer: W) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record(csv_header())?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(rows: &[ResultRow], path: &Path) -> Result<(), CliError> {
    let file = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    write_csv(rows, std::io::BufWriter::new(file)).map_err(|e| io_err(path, e))
}

pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    r.deserialize()
        .collect::<Result<Vec<ResultRow>, _>>()
        .map_err(|e| io_err(path, e))
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub spec: &'a RunSpec,
    pub seed: u64,
    pub paired: bool,
    pub git_revision: Option<String>,
    pub timestamp_unix: u64,
    pub wall_time_s: f64,
    pub rows: usize,
    pub failures: usize,
    pub timings: &'a [Timing],
    pub warnings: &'a [PointWarning],
}

/// `git rev-parse HEAD` in the working directory, if available.
pub fn git_revision() -> Option<String> {
    let out = Command::new("git").args(["rev-parse", "HEAD"]).output().ok()?;
    if !out.status.success() {
        return None;
    }
    let rev = String::from_utf8(out.stdout).ok()?.trim().to_string();
    (!rev.is_empty()).then_some(rev)
}

pub fn manifest_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

pub fn write_manifest(spec: &RunSpec, result: &SweepResult, wall_time_s: f64, path: &Path) -> Result<(), CliError> {
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        spec,
        seed: spec.sim.seed,
        paired: spec.paired,
        git_revision: git_revision(),
        timestamp_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
        wall_time_s,
        rows: result.rows.len(),
        failures: result.failures(),
        timings: &result.timings,
        warnings: &result.warnings,
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| io_err(path, e))?;
    std::fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_table_is_header_only() {
        let mut buf = Vec::new();
        write_csv(&[], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("point,backend,gamma_db"));
    }

    #[test]
    fn manifest_sits_next_to_csv() {
        assert_eq!(manifest_path(Path::new("out/fig1.csv")), PathBuf::from("out/fig1.json"));
    }
}
