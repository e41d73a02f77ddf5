//! Grid evaluation over both backends.

use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::runspec::{Backend, RunSpec, Scenario};
use super::CliError;
use crate::analytic::{coverage_probability, CoverageWarning, MomentMode};
use crate::simcore::{estimate_coverage, SimConfig};

/// One CSV row. Column order is the field order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub point: usize,
    pub backend: Backend,
    pub gamma_db: f64,
    pub delta: f64,
    pub lambda_b: f64,
    pub n_b: u32,
    pub n_u: u32,
    /// Effective BS beamwidth.
    pub theta_b_deg: Option<f64>,
    pub sigma_b_deg: f64,
    pub sigma_u_deg: f64,
    pub p_tx_dbm: f64,
    pub noise_dbm: Option<f64>,
    pub pathloss_exp: f64,
    pub absorption: f64,
    pub blockage_rate: f64,
    pub fading_shape: f64,
    pub fading_scale: f64,
    pub freq_hz: f64,
    pub mode: Option<MomentMode>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub coverage: Option<f64>,
    pub stderr: Option<f64>,
    pub coverage_conditioned: Option<f64>,
    pub error: Option<String>,
}

impl ResultRow {
    fn new(point: usize, backend: Backend, s: &Scenario) -> Self {
        let arrays = s.arrays().ok();
        Self {
            point,
            backend,
            gamma_db: s.gamma_db,
            delta: s.delta,
            lambda_b: s.lambda_b,
            n_b: arrays.map_or(s.n_b, |(bs, _)| bs.n_elements()),
            n_u: s.n_u,
            theta_b_deg: arrays.map(|(bs, _)| bs.beamwidth().to_degrees()),
            sigma_b_deg: s.sigma_b_deg,
            sigma_u_deg: s.sigma_u_deg,
            p_tx_dbm: s.p_tx_dbm,
            noise_dbm: s.noise_dbm,
            pathloss_exp: s.pathloss_exp,
            absorption: s.absorption,
            blockage_rate: s.blockage_rate,
            fading_shape: s.fading_shape,
            fading_scale: s.fading_scale,
            freq_hz: s.freq_hz,
            mode: None,
            trials: None,
            seed: None,
            coverage: None,
            stderr: None,
            coverage_conditioned: None,
            error: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub backend: Backend,
    pub points: Vec<usize>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointWarning {
    pub point: usize,
    pub warning: CoverageWarning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<ResultRow>,
    pub timings: Vec<Timing>,
    pub warnings: Vec<PointWarning>,
}

impl SweepResult {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }
}

/// Seed of the `group`-th Monte Carlo batch.
pub fn group_seed(seed: u64, group: u64, paired: bool) -> u64 {
    if paired {
        return seed;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(group);
    rng.next_u64()
}

fn analytic_row(spec: &RunSpec, point: usize, s: &Scenario) -> (ResultRow, Vec<PointWarning>, Timing) {
    let start = Instant::now();
    let mut row = ResultRow::new(point, Backend::Analytic, s);
    row.mode = Some(spec.query.options.moments);
    let mut warnings = Vec::new();
    let outcome = (|| -> Result<_, String> {
        let (bs, ue) = s.arrays().map_err(|e| e.to_string())?;
        let cfg = s.cluster().map_err(|e| e.to_string())?;
        let mut query = spec.query;
        query.sinr_threshold = s.gamma();
        coverage_probability(&s.params(), &bs, &ue, &cfg, &query).map_err(|e| e.to_string())
    })();
    match outcome {
        Ok(res) => {
            row.coverage = Some(res.probability);
            warnings.extend(res.warnings.into_iter().map(|warning| PointWarning { point, warning }));
        }
        Err(e) => row.error = Some(e),
    }
    let timing = Timing {
        backend: Backend::Analytic,
        points: vec![point],
        seconds: start.elapsed().as_secs_f64(),
    };
    (row, warnings, timing)
}

/// Points that differ only in `gamma_db` share one Monte Carlo pass.
fn mc_groups(points: &[Scenario]) -> Vec<Vec<usize>> {
    let mut groups: Vec<(Scenario, Vec<usize>)> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let key = Scenario { gamma_db: 0.0, ..*p };
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, members)) => members.push(i),
            None => groups.push((key, vec![i])),
        }
    }
    groups.into_iter().map(|(_, m)| m).collect()
}

fn mc_rows(spec: &RunSpec, points: &[Scenario], group: u64, members: &[usize]) -> (Vec<ResultRow>, Timing) {
    let start = Instant::now();
    let s = points[members[0]];
    let seed = group_seed(spec.sim.seed, group, spec.paired);
    let sim = SimConfig { seed, ..spec.sim };
    let gammas: Vec<f64> = members.iter().map(|&i| points[i].gamma()).collect();
    let outcome = (|| -> Result<_, String> {
        let (bs, ue) = s.arrays().map_err(|e| e.to_string())?;
        let cfg = s.cluster().map_err(|e| e.to_string())?;
        estimate_coverage(&s.params(), &bs, &ue, &cfg, &sim, &gammas).map_err(|e| e.to_string())
    })();
    let rows = members
        .iter()
        .enumerate()
        .map(|(k, &i)| {
            let mut row = ResultRow::new(i, Backend::Mc, &points[i]);
            row.trials = Some(sim.n_trials);
            row.seed = Some(seed);
            match &outcome {
                Ok(est) => {
                    let p = est.points[k];
                    row.coverage = Some(p.probability);
                    row.stderr = Some(p.stderr);
                    row.coverage_conditioned = Some(p.conditioned);
                }
                Err(e) => row.error = Some(e.clone()),
            }
            row
        })
        .collect();
    let timing = Timing {
        backend: Backend::Mc,
        points: members.to_vec(),
        seconds: start.elapsed().as_secs_f64(),
    };
    (rows, timing)
}

/// Evaluates every grid point with every requested backend. Per-point
/// failures are recorded in the row's `error` column.
pub fn run_sweep(spec: &RunSpec) -> Result<SweepResult, CliError> {
    let points = spec.points()?;
    let mut rows = Vec::new();
    let mut timings = Vec::new();
    let mut warnings = Vec::new();
    if spec.backends.contains(&Backend::Analytic) {
        let out: Vec<_> = points
            .par_iter()
            .enumerate()
            .map(|(i, s)| analytic_row(spec, i, s))
            .collect();
        for (row, w, t) in out {
            rows.push(row);
            warnings.extend(w);
            timings.push(t);
        }
    }
    if spec.backends.contains(&Backend::Mc) {
        for (g, members) in mc_groups(&points).iter().enumerate() {
            let (r, t) = mc_rows(spec, &points, g as u64, members);
            rows.extend(r);
            timings.push(t);
        }
    }
    rows.sort_by_key(|r| (r.point, r.backend));
    Ok(SweepResult { rows, timings, warnings })
}
