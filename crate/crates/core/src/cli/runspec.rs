//! Run configuration: a flat TOML table plus up to two `[[sweep]]` blocks.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::units::{db_to_linear, dbm_to_watts};
use super::CliError;
use crate::analytic::{AnalyticOptions, CoverageQuery, FadingAverage, GammaPlacement, MomentMode};
use crate::antenna::ArrayConfig;
use crate::channel::{FadingConvention, SystemParams};
use crate::cluster::{ClusterConfig, CountMode};
use crate::simcore::{Sampler, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Analytic,
    #[serde(alias = "montecarlo")]
    Mc,
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Analytic => "analytic",
            Backend::Mc => "mc",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepName {
    GammaDb,
    Delta,
    SigmaBDeg,
    SigmaUDeg,
    NB,
    NU,
    LambdaB,
    /// Continuous BS beamwidth; overrides `n_b`.
    ThetaBDeg,
}

impl SweepName {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepName::GammaDb => "gamma_db",
            SweepName::Delta => "delta",
            SweepName::SigmaBDeg => "sigma_b_deg",
            SweepName::SigmaUDeg => "sigma_u_deg",
            SweepName::NB => "n_b",
            SweepName::NU => "n_u",
            SweepName::LambdaB => "lambda_b",
            SweepName::ThetaBDeg => "theta_b_deg",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepDim {
    pub name: SweepName,
    /// In the user units implied by `name`.
    pub values: Vec<f64>,
}

/// One grid point in user units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub p_tx_dbm: f64,
    pub freq_hz: f64,
    pub absorption: f64,
    pub pathloss_exp: f64,
    pub lambda_b: f64,
    pub blockage_rate: f64,
    pub fading_shape: f64,
    pub fading_scale: f64,
    /// `None` is a noiseless receiver.
    pub noise_dbm: Option<f64>,
    pub n_b: u32,
    pub n_u: u32,
    pub sigma_b_deg: f64,
    pub sigma_u_deg: f64,
    pub theta_b_deg: Option<f64>,
    pub delta: f64,
    pub gamma_db: f64,
}

impl Scenario {
    pub fn params(&self) -> SystemParams {
        SystemParams {
            p_tx: dbm_to_watts(self.p_tx_dbm),
            freq: self.freq_hz,
            absorption: self.absorption,
            pathloss_exp: self.pathloss_exp,
            bs_density: self.lambda_b,
            blockage_rate: self.blockage_rate,
            fading_shape: self.fading_shape,
            fading_scale: self.fading_scale,
            noise_power: self.noise_dbm.map_or(0.0, dbm_to_watts),
        }
    }

    pub fn arrays(&self) -> Result<(ArrayConfig, ArrayConfig), CliError> {
        let sb = self.sigma_b_deg.to_radians();
        let bs = match self.theta_b_deg {
            Some(t) => ArrayConfig::from_beamwidth(t.to_radians(), sb),
            None => ArrayConfig::derive(self.n_b, sb),
        }
        .map_err(|e| CliError::Validation(format!("BS array: {e}")))?;
        let ue = ArrayConfig::derive(self.n_u, self.sigma_u_deg.to_radians())
            .map_err(|e| CliError::Validation(format!("user array: {e}")))?;
        Ok((bs, ue))
    }

    pub fn cluster(&self) -> Result<ClusterConfig, CliError> {
        ClusterConfig::new(self.delta).map_err(|e| CliError::Validation(e.to_string()))
    }

    pub fn gamma(&self) -> f64 {
        db_to_linear(self.gamma_db)
    }

    pub fn apply(&mut self, name: SweepName, value: f64) -> Result<(), CliError> {
        let count = |v: f64| -> Result<u32, CliError> {
            if v.fract() == 0.0 && v >= 0.0 && v <= f64::from(u32::MAX) {
                Ok(v as u32)
            } else {
                Err(CliError::Validation(format!("{} must be a non-negative integer, got {v}", name.as_str())))
            }
        };
        match name {
            SweepName::GammaDb => self.gamma_db = value,
            SweepName::Delta => self.delta = value,
            SweepName::SigmaBDeg => self.sigma_b_deg = value,
            SweepName::SigmaUDeg => self.sigma_u_deg = value,
            SweepName::NB => {
                self.n_b = count(value)?;
                self.theta_b_deg = None;
            }
            SweepName::NU => self.n_u = count(value)?,
            SweepName::LambdaB => self.lambda_b = value,
            SweepName::ThetaBDeg => self.theta_b_deg = Some(value),
        }
        Ok(())
    }

    pub fn validate(&self, sim: &SimConfig, needs_sim: bool) -> Result<(), CliError> {
        if !self.gamma_db.is_finite() {
            return Err(CliError::Validation(format!("gamma_db must be finite, got {}", self.gamma_db)));
        }
        if !self.p_tx_dbm.is_finite() {
            return Err(CliError::Validation(format!("p_tx_dbm must be finite, got {}", self.p_tx_dbm)));
        }
        if matches!(self.noise_dbm, Some(n) if !n.is_finite()) {
            return Err(CliError::Validation("noise_dbm must be finite".into()));
        }
        self.params()
            .validate()
            .map_err(|e| CliError::Validation(e.to_string()))?;
        self.arrays()?;
        self.cluster()?;
        if needs_sim {
            sim.validate(&self.params())
                .map_err(|e| CliError::Validation(e.to_string()))?;
        }
        Ok(())
    }
}

impl Default for Scenario {
    fn default() -> Self {
        let p = SystemParams::default();
        Self {
            p_tx_dbm: 30.0,
            freq_hz: p.freq,
            absorption: p.absorption,
            pathloss_exp: p.pathloss_exp,
            lambda_b: p.bs_density,
            blockage_rate: p.blockage_rate,
            fading_shape: p.fading_shape,
            fading_scale: p.fading_scale,
            noise_dbm: None,
            n_b: 8,
            n_u: 8,
            sigma_b_deg: 10.0,
            sigma_u_deg: 10.0,
            theta_b_deg: None,
            delta: 0.6,
            gamma_db: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub base: Scenario,
    pub sim: SimConfig,
    /// `sinr_threshold` is overwritten per grid point.
    pub query: CoverageQuery,
    pub sweep: Vec<SweepDim>,
    pub backends: Vec<Backend>,
    /// Same seed for every grid point instead of one derived per point.
    pub paired: bool,
    pub output: Option<PathBuf>,
}

impl Default for RunSpec {
    fn default() -> Self {
        let base = Scenario::default();
        Self {
            base,
            sim: SimConfig::default(),
            query: CoverageQuery::new(base.gamma()),
            sweep: Vec::new(),
            backends: vec![Backend::Analytic],
            paired: false,
            output: None,
        }
    }
}

impl RunSpec {
    /// Grid points in row-major order (first sweep dimension outermost).
    pub fn points(&self) -> Result<Vec<Scenario>, CliError> {
        let mut points = vec![self.base];
        for dim in &self.sweep {
            let mut next = Vec::with_capacity(points.len() * dim.values.len());
            for p in &points {
                for &v in &dim.values {
                    let mut q = *p;
                    q.apply(dim.name, v)?;
                    next.push(q);
                }
            }
            points = next;
        }
        Ok(points)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.sweep.len() > 2 {
            return Err(CliError::Validation(format!(
                "at most two sweep dimensions are supported, got {}",
                self.sweep.len()
            )));
        }
        if let [a, b] = self.sweep.as_slice() {
            if a.name == b.name {
                return Err(CliError::Validation(format!(
                    "sweep dimension `{}` appears twice",
                    a.name.as_str()
                )));
            }
        }
        for dim in &self.sweep {
            if dim.values.is_empty() {
                return Err(CliError::Validation(format!(
                    "sweep dimension `{}` has no values",
                    dim.name.as_str()
                )));
            }
        }
        if self.backends.is_empty() {
            return Err(CliError::Validation("at least one backend is required".into()));
        }
        let needs_sim = self.backends.contains(&Backend::Mc);
        if needs_sim && self.sim.n_trials < 100 {
            return Err(CliError::Validation(format!(
                "trials must be >= 100, got {}",
                self.sim.n_trials
            )));
        }
        for p in self.points()? {
            p.validate(&self.sim, needs_sim)?;
        }
        Ok(())
    }

    pub fn set_mode(&mut self, mode: MomentMode) {
        self.query.options = AnalyticOptions::for_mode(mode);
    }
}

/// Sweep block as written in the file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    name: SweepName,
    values: Option<Vec<f64>>,
    start: Option<f64>,
    stop: Option<f64>,
    step: Option<f64>,
}

/// Inclusive arithmetic grid.
pub fn arithmetic_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>, CliError> {
    if !(step.is_finite() && step != 0.0 && start.is_finite() && stop.is_finite()) {
        return Err(CliError::Validation("sweep start/stop/step must be finite with step != 0".into()));
    }
    let span = (stop - start) / step;
    if span < -1e-9 {
        return Err(CliError::Validation("sweep step points away from stop".into()));
    }
    let n = (span + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|k| start + k as f64 * step).collect())
}

impl RawSweep {
    fn into_dim(self) -> Result<SweepDim, CliError> {
        let values = match (self.values, self.start, self.stop, self.step) {
            (Some(v), None, None, None) => v,
            (None, Some(a), Some(b), Some(s)) => arithmetic_grid(a, b, s)?,
            _ => {
                return Err(CliError::Validation(format!(
                    "sweep `{}` needs either `values` or all of `start`, `stop`, `step`",
                    self.name.as_str()
                )))
            }
        };
        Ok(SweepDim {
            name: self.name,
            values,
        })
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawRunSpec {
    p_tx_dbm: Option<f64>,
    freq_hz: Option<f64>,
    absorption: Option<f64>,
    pathloss_exp: Option<f64>,
    lambda_b: Option<f64>,
    blockage_rate: Option<f64>,
    fading_shape: Option<f64>,
    fading_scale: Option<f64>,
    noise_dbm: Option<f64>,
    n_b: Option<u32>,
    n_u: Option<u32>,
    sigma_b_deg: Option<f64>,
    sigma_u_deg: Option<f64>,
    theta_b_deg: Option<f64>,
    delta: Option<f64>,
    gamma_db: Option<f64>,

    backends: Option<Vec<Backend>>,
    trials: Option<u64>,
    seed: Option<u64>,
    window_radius: Option<f64>,
    min_dist: Option<f64>,
    sampler: Option<Sampler>,
    paired: Option<bool>,

    mode: Option<MomentMode>,
    count_mode: Option<CountMode>,
    fading_convention: Option<FadingConvention>,
    gamma_placement: Option<GammaPlacement>,
    fading_avg: Option<String>,
    fading_nodes: Option<usize>,
    cf_terms: Option<usize>,
    r_max: Option<f64>,
    q_max: Option<u64>,

    output: Option<PathBuf>,
    #[serde(default)]
    sweep: Vec<RawSweep>,
}

impl RawRunSpec {
    fn resolve(self) -> Result<RunSpec, CliError> {
        let mut spec = RunSpec::default();
        let b = &mut spec.base;
        macro_rules! take {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { b.$f = v; } )* };
        }
        take!(
            p_tx_dbm, freq_hz, absorption, pathloss_exp, lambda_b, blockage_rate, n_b, n_u, sigma_b_deg,
            sigma_u_deg, delta, gamma_db
        );
        if let Some(m) = self.fading_shape {
            b.fading_shape = m;
            b.fading_scale = 1.0 / m;
        }
        if let Some(s) = self.fading_scale {
            b.fading_scale = s;
        }
        b.noise_dbm = self.noise_dbm;
        b.theta_b_deg = self.theta_b_deg;

        if let Some(v) = self.backends {
            spec.backends = v;
        }
        spec.backends.sort();
        spec.backends.dedup();
        let sim = &mut spec.sim;
        if let Some(v) = self.trials {
            sim.n_trials = v;
        }
        if let Some(v) = self.seed {
            sim.seed = v;
        }
        if let Some(v) = self.window_radius {
            sim.window_radius = v;
        }
        if let Some(v) = self.min_dist {
            sim.min_dist = v;
        }
        if let Some(v) = self.sampler {
            sim.sampler = v;
        }
        spec.paired = self.paired.unwrap_or(false);

        if let Some(mode) = self.mode {
            spec.set_mode(mode);
        }
        let q = &mut spec.query;
        if let Some(v) = self.count_mode {
            q.options.count = v;
        }
        if let Some(v) = self.fading_convention {
            q.options.convention = v;
        }
        if let Some(v) = self.gamma_placement {
            q.options.placement = v;
        }
        let nodes = self.fading_nodes.unwrap_or(16);
        q.fading_avg = match self.fading_avg.as_deref() {
            None | Some("quadrature") => FadingAverage::Quadrature { nodes },
            Some("mean-field") | Some("mean_field") => FadingAverage::MeanField,
            Some(other) => {
                return Err(CliError::Validation(format!(
                    "fading_avg must be `quadrature` or `mean-field`, got `{other}`"
                )))
            }
        };
        if let Some(v) = self.cf_terms {
            q.cf_terms = v;
        }
        q.r_max = self.r_max;
        q.q_max = self.q_max;
        q.sinr_threshold = spec.base.gamma();

        spec.output = self.output;
        spec.sweep = self
            .sweep
            .into_iter()
            .map(RawSweep::into_dim)
            .collect::<Result<_, _>>()?;
        Ok(spec)
    }
}

/// Parses a run file from text; `origin` labels diagnostics.
pub fn parse_runspec(text: &str, origin: &str) -> Result<RunSpec, CliError> {
    let raw: RawRunSpec = toml::from_str(text).map_err(|e| CliError::Parse {
        origin: origin.to_string(),
        message: e.to_string(),
    })?;
    let spec = raw.resolve()?;
    spec.validate()?;
    Ok(spec)
}

pub fn load_runspec(path: &Path) -> Result<RunSpec, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    parse_runspec(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let spec = parse_runspec("", "empty").unwrap();
        let p = spec.base.params();
        assert!((p.p_tx - 1.0).abs() < 1e-15);
        assert_eq!(p.pathloss_exp, 2.5);
        assert_eq!(p.bs_density, 0.005);
        assert_eq!(p.absorption, 0.06);
        assert_eq!((spec.base.n_b, spec.base.n_u), (8, 8));
        assert!((p.blockage_rate - 1.0 / 141.4).abs() < 1e-15);
        assert_eq!(p.noise_power, 0.0);
        assert_eq!(spec.points().unwrap().len(), 1);
    }

    #[test]
    fn delta_out_of_range_rejected() {
        let err = parse_runspec("delta = 1.5", "t").unwrap_err();
        assert!(matches!(err, CliError::Validation(_)));
        assert!(err.to_string().contains("delta"));
    }

    #[test]
    fn gamma_range_sweep_has_26_points() {
        let text = "[[sweep]]\nname = \"gamma_db\"\nstart = -10\nstop = 40\nstep = 2\n";
        let spec = parse_runspec(text, "t").unwrap();
        assert_eq!(spec.sweep[0].values.len(), 26);
        assert_eq!(spec.points().unwrap().len(), 26);
    }

    #[test]
    fn unknown_key_reports_location() {
        let err = parse_runspec("n_b = 8\nbogus = 3\n", "t").unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, CliError::Parse { .. }));
        assert!(msg.contains("bogus") && msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn duplicate_and_empty_sweeps_rejected() {
        let dup = "[[sweep]]\nname = \"delta\"\nvalues = [0.5]\n[[sweep]]\nname = \"delta\"\nvalues = [0.6]\n";
        assert!(parse_runspec(dup, "t").is_err());
        let empty = "[[sweep]]\nname = \"delta\"\nvalues = []\n";
        assert!(parse_runspec(empty, "t").is_err());
    }

    #[test]
    fn two_dimensional_grid_is_row_major() {
        let text = "[[sweep]]\nname = \"delta\"\nvalues = [1.0, 0.5]\n[[sweep]]\nname = \"gamma_db\"\nvalues = [0, 10, 20]\n";
        let pts = parse_runspec(text, "t").unwrap().points().unwrap();
        assert_eq!(pts.len(), 6);
        assert_eq!((pts[0].delta, pts[0].gamma_db), (1.0, 0.0));
        assert_eq!((pts[2].delta, pts[2].gamma_db), (1.0, 20.0));
        assert_eq!((pts[3].delta, pts[3].gamma_db), (0.5, 0.0));
    }

    #[test]
    fn small_window_rejected_only_for_mc() {
        assert!(parse_runspec("window_radius = 300", "t").is_ok());
        let err = parse_runspec("window_radius = 300\nbackends = [\"mc\"]", "t").unwrap_err();
        assert!(err.to_string().contains("window_radius"));
    }

    #[test]
    fn fading_shape_sets_unit_mean_scale() {
        let spec = parse_runspec("fading_shape = 4", "t").unwrap();
        assert_eq!(spec.base.fading_scale, 0.25);
        let spec = parse_runspec("fading_shape = 4\nfading_scale = 1.0", "t").unwrap();
        assert_eq!(spec.base.fading_scale, 1.0);
    }
}
