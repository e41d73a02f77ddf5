//! Closed-form coverage engine.
//!
//! Conditioned on the cluster radius `R`, the aggregate interference is
//! replaced by a Gaussian with its exact mean and variance. The in-cluster
//! contribution is the Poisson count of cooperating BSs times their mean
//! received power, and the reference link keeps its gain state and
//! (optionally) its fading. The outer average runs over the law of `R`.

use std::cell::Cell;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::antenna::{
    interferer_gain_distribution, serving_gain_distribution, AntennaError, ArrayConfig, GainDistribution,
};
use crate::channel::{ChannelError, FadingConvention, SystemParams};
use crate::cluster::{
    in_cluster_count_mean, los_area_integral, los_void_probability, nearest_los_pdf, nearest_los_survival,
    ref_distance_tail_bound, ClusterConfig, CountMode,
};
use crate::specfun::{
    erf, erfc, gauss_laguerre, integrate, ln_gamma, upper_incomplete_gamma, QuadratureSpec, SpecFunError,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticError {
    #[error(transparent)]
    SpecFun(#[from] SpecFunError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Antenna(#[from] AntennaError),
    #[error("characteristic-function series diverges after {terms} terms (last stable value {partial})")]
    SeriesDivergence { partial: Complex64, terms: usize },
    #[error("interference variance is not positive ({variance:e}) at R = {radius} m")]
    NonPositiveVariance { radius: f64, variance: f64 },
    #[error("invalid coverage query: {0}")]
    InvalidQuery(&'static str),
}

pub type Result<T> = std::result::Result<T, AnalyticError>;

/// How the interference moments are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MomentMode {
    /// Literal closed forms; blockage attenuates every power of the
    /// per-BS contribution.
    #[serde(rename = "paper")]
    PaperFaithful,
    /// Campbell's theorem on the LOS-thinned process.
    #[default]
    #[serde(rename = "corrected")]
    CampbellCorrected,
}

impl MomentMode {
    /// Exponential decay rate of the `n`-th power of a per-BS term.
    fn decay_rate(self, params: &SystemParams, n: u32) -> f64 {
        let n = f64::from(n);
        match self {
            MomentMode::PaperFaithful => n * (params.absorption + params.blockage_rate),
            MomentMode::CampbellCorrected => n * params.absorption + params.blockage_rate,
        }
    }
}

/// Treatment of the reference link's fading inside the coverage integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FadingAverage {
    /// Substitute `E[xi]`.
    MeanField,
    /// Average over the gamma law with a generalized Gauss-Laguerre rule.
    Quadrature { nodes: usize },
}

impl Default for FadingAverage {
    fn default() -> Self {
        FadingAverage::Quadrature { nodes: 16 }
    }
}

/// Where the SINR threshold enters the erf argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GammaPlacement {
    /// `(A + qD - g s2 - g mu) / (g sqrt(2 var))`.
    #[default]
    Scaled,
    /// `(A + qD - (s2 + mu)) / (g sqrt(2 var))`.
    Unscaled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticOptions {
    pub moments: MomentMode,
    pub count: CountMode,
    pub convention: FadingConvention,
    pub placement: GammaPlacement,
}

impl AnalyticOptions {
    /// LOS-thinned moments and counts with the simulator's fading law.
    pub fn corrected() -> Self {
        Self {
            moments: MomentMode::CampbellCorrected,
            count: CountMode::Thinned,
            convention: FadingConvention::Scale,
            placement: GammaPlacement::Scaled,
        }
    }

    /// Literal closed forms: per-order blockage and unthinned counts.
    /// The fading convention stays independent.
    pub fn paper() -> Self {
        Self {
            moments: MomentMode::PaperFaithful,
            count: CountMode::Unthinned,
            convention: FadingConvention::Scale,
            placement: GammaPlacement::Scaled,
        }
    }

    pub fn for_mode(mode: MomentMode) -> Self {
        match mode {
            MomentMode::PaperFaithful => Self::paper(),
            MomentMode::CampbellCorrected => Self::corrected(),
        }
    }
}

impl Default for AnalyticOptions {
    fn default() -> Self {
        Self::corrected()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferenceStats {
    pub mean: f64,
    pub variance: f64,
    pub mode: MomentMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageQuery {
    /// Linear SINR threshold.
    pub sinr_threshold: f64,
    /// Outer truncation of the cluster radius; `None` picks it from the tail
    /// of the radius law.
    pub r_max: Option<f64>,
    /// Upper limit of the Poisson count sum; `None` uses
    /// `mean + 12 sqrt(mean)` per radius.
    pub q_max: Option<u64>,
    pub cf_terms: usize,
    pub quad: QuadratureSpec,
    pub fading_avg: FadingAverage,
    pub options: AnalyticOptions,
}

impl CoverageQuery {
    pub fn new(sinr_threshold: f64) -> Self {
        Self {
            sinr_threshold,
            r_max: None,
            q_max: None,
            cf_terms: 30,
            quad: QuadratureSpec {
                max_subdivisions: 4000,
                abs_tol: 1e-7,
                rel_tol: 1e-7,
            },
            fading_avg: FadingAverage::default(),
            options: AnalyticOptions::default(),
        }
    }

    pub fn with_options(mut self, options: AnalyticOptions) -> Self {
        self.options = options;
        self
    }

    pub fn with_fading_avg(mut self, fading_avg: FadingAverage) -> Self {
        self.fading_avg = fading_avg;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.sinr_threshold > 0.0) || !self.sinr_threshold.is_finite() {
            return Err(AnalyticError::InvalidQuery("sinr_threshold must be finite and > 0"));
        }
        if self.cf_terms == 0 {
            return Err(AnalyticError::InvalidQuery("cf_terms must be >= 1"));
        }
        if matches!(self.r_max, Some(r) if !(r > 0.0)) {
            return Err(AnalyticError::InvalidQuery("r_max must be > 0"));
        }
        if matches!(self.fading_avg, FadingAverage::Quadrature { nodes: 0 }) {
            return Err(AnalyticError::InvalidQuery("fading quadrature needs at least one node"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CoverageWarning {
    /// Conditioned radius-law mass beyond `r_max`.
    RadiusTruncation { tail_mass: f64 },
    /// Largest Poisson mass dropped by `q_max` at any radius.
    PoissonTruncation { tail_mass: f64 },
    /// The integral left `[0, 1]` by this much before clamping.
    ClampExcursion { amount: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageResult {
    pub probability: f64,
    pub unclamped: f64,
    pub warnings: Vec<CoverageWarning>,
}

/// `int_lo^hi t^(1 - alpha n) exp(-s t) dt` via incomplete gammas.
fn power_decay_integral(alpha_n: f64, rate: f64, lo: f64, hi: f64) -> Result<f64> {
    let a = 2.0 - alpha_n;
    let upper = |x: f64| -> Result<f64> {
        if x.is_infinite() {
            Ok(0.0)
        } else {
            Ok(upper_incomplete_gamma(a, x)?)
        }
    };
    let diff = upper(rate * lo)? - upper(rate * hi)?;
    Ok(rate.powf(alpha_n - 2.0) * diff)
}

/// Sums the cumulant series `sum_n (j w)^n kappa_n / n!` and exponentiates.
fn cf_from_cumulants(
    params: &SystemParams,
    gains: &GainDistribution,
    omega: f64,
    n_terms: usize,
    mode: MomentMode,
    convention: FadingConvention,
    lo: f64,
    hi: f64,
) -> Result<Complex64> {
    if omega == 0.0 || hi <= lo {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let alpha = params.pathloss_exp;
    let unit = params.p_tx * params.c_const();
    let lead = 2.0 * PI * params.bs_density;
    let mut log_cf = Complex64::new(0.0, 0.0);
    let mut last_mag = f64::INFINITY;
    let mut growing = 0usize;
    for n in 1..=n_terms as u32 {
        let nf = f64::from(n);
        let gain_moment = gains.moment(n as i32);
        let integral = power_decay_integral(alpha * nf, mode.decay_rate(params, n), lo, hi)?;
        let ln_mag = nf * (omega.abs() * unit).ln() + gain_moment.ln() + convention.moment(params, n).ln()
            - ln_gamma(nf + 1.0)
            + integral.ln();
        let mag = if integral > 0.0 { lead * ln_mag.exp() } else { 0.0 };
        // (j sgn(w))^n
        let phase = match n % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, omega.signum()),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -omega.signum()),
        };
        if !mag.is_finite() {
            return Err(AnalyticError::SeriesDivergence {
                partial: log_cf.exp(),
                terms: n as usize - 1,
            });
        }
        log_cf += phase * mag;
        if n >= 2 && mag <= 1e-14 * log_cf.norm().max(1e-300) {
            return Ok(log_cf.exp());
        }
        if mag > last_mag {
            growing += 1;
        } else {
            growing = 0;
        }
        if growing >= 3 {
            return Err(AnalyticError::SeriesDivergence {
                partial: log_cf.exp(),
                terms: n as usize,
            });
        }
        last_mag = mag;
    }
    if last_mag > 1e-8 * log_cf.norm() {
        return Err(AnalyticError::SeriesDivergence {
            partial: log_cf.exp(),
            terms: n_terms,
        });
    }
    Ok(log_cf.exp())
}

/// Characteristic function `E[exp(j w I)]` of the interference from LOS BSs
/// beyond `radius`.
pub fn interference_cf(
    params: &SystemParams,
    gains: &GainDistribution,
    radius: f64,
    omega: f64,
    n_terms: usize,
    mode: MomentMode,
    convention: FadingConvention,
) -> Result<Complex64> {
    cf_from_cumulants(params, gains, omega, n_terms, mode, convention, radius, f64::INFINITY)
}

/// Characteristic function of the aggregate cooperative signal from the
/// annulus `[delta R, R]`.
pub fn signal_cf(
    params: &SystemParams,
    gains: &GainDistribution,
    cfg: &ClusterConfig,
    radius: f64,
    omega: f64,
    n_terms: usize,
    mode: MomentMode,
    convention: FadingConvention,
) -> Result<Complex64> {
    let inner = cfg.delta() * radius;
    cf_from_cumulants(params, gains, omega, n_terms, mode, convention, inner, radius)
}

/// Conditional mean and variance of the interference beyond `radius`.
pub fn interference_moments(
    params: &SystemParams,
    gains: &GainDistribution,
    radius: f64,
    mode: MomentMode,
    convention: FadingConvention,
) -> Result<InterferenceStats> {
    let alpha = params.pathloss_exp;
    let lead = 2.0 * PI * params.bs_density;
    let unit = params.p_tx * params.c_const();
    let (mean, variance) = match mode {
        MomentMode::CampbellCorrected => {
            let j1 = power_decay_integral(alpha, mode.decay_rate(params, 1), radius, f64::INFINITY)?;
            let j2 = power_decay_integral(2.0 * alpha, mode.decay_rate(params, 2), radius, f64::INFINITY)?;
            let mean = lead * convention.moment(params, 1) * unit * gains.moment(1) * j1;
            let var = lead * convention.moment(params, 2) * unit * unit * gains.moment(2) * j2;
            (mean, var)
        }
        MomentMode::PaperFaithful => {
            let m = params.fading_shape;
            let omega = convention.rate_parameter(params);
            let s = params.absorption + params.blockage_rate;
            let g1 = upper_incomplete_gamma(2.0 - alpha, s * radius)?;
            let g2 = upper_incomplete_gamma(2.0 - 2.0 * alpha, 2.0 * s * radius)?;
            let first = lead * unit * gains.moment(1) * m * g1 / (omega * s.powf(2.0 - alpha));
            let squared = lead * unit * gains.moment(2) * m * (1.0 + m) * g1;
            let second = squared * squared / (omega * omega * s.powf(4.0 - 2.0 * alpha))
                + 2.0 * lead * unit * unit * gains.moment(2) * m * m * g2
                    / (2.0 * omega * omega * (2.0 * s).powf(2.0 - 2.0 * alpha));
            (first, second - first * first)
        }
    };
    Ok(InterferenceStats { mean, variance, mode })
}

/// Gaussian approximation of the interference CDF.
pub fn interference_cdf(stats: &InterferenceStats, threshold: f64) -> f64 {
    if stats.variance <= 0.0 {
        return if threshold >= stats.mean { 1.0 } else { 0.0 };
    }
    0.5 * (1.0 + erf((threshold - stats.mean) / (2.0 * stats.variance).sqrt()))
}

/// Mean received power `D(R)` of one cooperating BS in the annulus.
pub fn serving_mean_term(
    params: &SystemParams,
    gains: &GainDistribution,
    cfg: &ClusterConfig,
    radius: f64,
    count: CountMode,
    convention: FadingConvention,
) -> Result<f64> {
    let delta = cfg.delta();
    if delta >= 1.0 {
        return Ok(0.0);
    }
    let alpha = params.pathloss_exp;
    let scale = params.p_tx * params.c_const() * gains.moment(1) * convention.moment(params, 1);
    let inner = delta * radius;
    match count {
        CountMode::Unthinned => {
            let k = params.absorption;
            let integral = power_decay_integral(alpha, k, inner, radius)?;
            Ok(2.0 * scale * integral / (radius * radius * (1.0 - delta * delta)))
        }
        CountMode::Thinned => {
            let beta = params.blockage_rate;
            let rate = params.absorption + beta;
            let integral = power_decay_integral(alpha, rate, inner, radius)?;
            let area = los_area_integral(beta, radius) - los_area_integral(beta, inner);
            if area <= 0.0 {
                return Ok(0.0);
            }
            Ok(scale * integral / area)
        }
    }
}

/// Weighted fading nodes: `(weight, xi)` with weights summing to one.
fn fading_nodes(params: &SystemParams, query: &CoverageQuery) -> Result<Vec<(f64, f64)>> {
    let convention = query.options.convention;
    match query.fading_avg {
        FadingAverage::MeanField => Ok(vec![(1.0, convention.moment(params, 1))]),
        FadingAverage::Quadrature { nodes } => {
            let m = params.fading_shape;
            let (x, w) = gauss_laguerre(nodes, m - 1.0)?;
            let scale = 1.0 / convention.rate_parameter(params);
            let norm = ln_gamma(m).exp();
            Ok(x.iter().zip(&w).map(|(x, w)| (w / norm, x * scale)).collect())
        }
    }
}

#[inline]
fn gaussian_below(numerator: f64, denom: f64) -> f64 {
    if denom > 0.0 && denom.is_finite() {
        0.5 * erfc(-numerator / denom)
    } else if numerator > 0.0 {
        1.0
    } else if numerator == 0.0 {
        0.5
    } else {
        0.0
    }
}

/// Coverage probability `P(SINR > gamma)` averaged over the cluster radius.
pub fn coverage_probability(
    params: &SystemParams,
    bs: &ArrayConfig,
    ue: &ArrayConfig,
    cfg: &ClusterConfig,
    query: &CoverageQuery,
) -> Result<CoverageResult> {
    params.validate()?;
    query.validate()?;
    let opts = query.options;
    let serving = serving_gain_distribution(bs, ue);
    let interferer = interferer_gain_distribution(bs, ue);
    let nodes = fading_nodes(params, query)?;
    let delta = cfg.delta();
    let gamma = query.sinr_threshold;
    let noise = params.noise_power;
    let void = los_void_probability(params);
    let norm = 1.0 - void;

    let mut warnings = Vec::new();
    let auto_top = ref_distance_tail_bound(params, 1e-8);
    let r_top = match query.r_max {
        Some(r_max) => {
            let top = delta * r_max;
            let tail = ((nearest_los_survival(params, top) - void) / norm).max(0.0);
            if tail > 1e-6 {
                warnings.push(CoverageWarning::RadiusTruncation { tail_mass: tail });
            }
            top
        }
        None => auto_top,
    };

    let dropped = Cell::new(0.0f64);
    let failure: Cell<Option<AnalyticError>> = Cell::new(None);

    let conditional = |radius: f64| -> Result<f64> {
        let stats = interference_moments(params, &interferer, radius, opts.moments, opts.convention)?;
        if stats.variance < 0.0 {
            return Err(AnalyticError::NonPositiveVariance {
                radius,
                variance: stats.variance,
            });
        }
        let (q_mean, d_term) = if delta < 1.0 {
            (
                in_cluster_count_mean(params, cfg, radius, opts.count),
                serving_mean_term(params, &serving, cfg, radius, opts.count, opts.convention)?,
            )
        } else {
            (0.0, 0.0)
        };
        let reference = params.p_tx
            * crate::channel::path_loss(params, delta * radius).map_err(AnalyticError::Channel)?;
        let (offset, denom) = match opts.placement {
            GammaPlacement::Scaled => (gamma * noise + gamma * stats.mean, gamma * (2.0 * stats.variance).sqrt()),
            GammaPlacement::Unscaled => (noise + stats.mean, gamma * (2.0 * stats.variance).sqrt()),
        };

        let (q_lo, q_hi) = if q_mean > 0.0 {
            let spread = 12.0 * q_mean.sqrt() + 8.0;
            let lo = (q_mean - spread).floor().max(0.0) as u64;
            let hi = (q_mean + spread).ceil() as u64;
            (lo, query.q_max.map_or(hi, |cap| hi.min(cap)))
        } else {
            (0, 0)
        };

        let mut total = 0.0;
        let mut mass = 0.0;
        let ln_mean = q_mean.ln();
        for q in q_lo..=q_hi {
            let pmf = if q_mean > 0.0 {
                let qf = q as f64;
                (qf * ln_mean - q_mean - ln_gamma(qf + 1.0)).exp()
            } else {
                1.0
            };
            mass += pmf;
            if pmf < 1e-18 {
                continue;
            }
            let cooperative = q as f64 * d_term;
            let mut inner = 0.0;
            for (&g, &p) in serving.gains.iter().zip(&serving.probs) {
                if p == 0.0 {
                    continue;
                }
                let a = reference * g;
                let mut faded = 0.0;
                for &(w, xi) in &nodes {
                    faded += w * gaussian_below(a * xi + cooperative - offset, denom);
                }
                inner += p * faded;
            }
            total += pmf * inner;
        }
        if query.q_max.is_some() {
            let tail = (1.0 - mass).max(0.0);
            if tail > dropped.get() {
                dropped.set(tail);
            }
        }
        Ok(total)
    };

    let integrand = |r: f64| -> f64 {
        let density = nearest_los_pdf(params, r) / norm;
        if density == 0.0 || r <= 0.0 {
            return 0.0;
        }
        match conditional(r / delta) {
            Ok(v) => density * v,
            Err(e) => {
                failure.set(Some(e));
                0.0
            }
        }
    };

    let raw = integrate(integrand, 0.0, r_top, &query.quad)?;
    if let Some(e) = failure.take() {
        return Err(e);
    }
    if dropped.get() > 1e-6 {
        warnings.push(CoverageWarning::PoissonTruncation {
            tail_mass: dropped.get(),
        });
    }
    let probability = raw.clamp(0.0, 1.0);
    let excursion = (raw - probability).abs();
    if excursion > 0.0 {
        warnings.push(CoverageWarning::ClampExcursion { amount: excursion });
    }
    Ok(CoverageResult {
        probability,
        unclamped: raw,
        warnings,
    })
}
