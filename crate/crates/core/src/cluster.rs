//! User-centric cluster geometry.
//!
//! The reference BS is the nearest line-of-sight BS, at distance `r`. Every
//! LOS BS within `R = r / delta` joins the serving cluster.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::antenna::ArrayConfig;
use crate::channel::SystemParams;
use crate::specfun::{lambert_w0, ln_gamma};

/// Far-field guard distance in metres; no link is shorter than this.
pub const MIN_LINK_DISTANCE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClusterError {
    #[error("clustering parameter delta must lie in (0, 1], got {0}")]
    InvalidDelta(f64),
    #[error("power threshold {tau:e} W must be > 0")]
    InvalidThreshold { tau: f64 },
    #[error("power threshold {tau:e} W exceeds the {max:e} W received at the far-field guard")]
    ThresholdTooHigh { tau: f64, max: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    delta: f64,
}

impl ClusterConfig {
    pub fn new(delta: f64) -> Result<Self, ClusterError> {
        if delta > 0.0 && delta <= 1.0 {
            Ok(Self { delta })
        } else {
            Err(ClusterError::InvalidDelta(delta))
        }
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn geometry(&self, ref_dist: f64) -> ClusterGeometry {
        ClusterGeometry {
            ref_dist,
            radius: ref_dist / self.delta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterGeometry {
    pub ref_dist: f64,
    pub radius: f64,
}

/// Whether the in-cluster BS count sees blockage thinning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CountMode {
    /// Unthinned annulus area times `lambda_b`.
    Unthinned,
    /// LOS-thinned density `lambda_b exp(-beta t)`.
    Thinned,
}

/// Mean received power from the strongest-gain state of a BS at `dist`.
pub fn peak_average_power(params: &SystemParams, bs: &ArrayConfig, ue: &ArrayConfig, dist: f64) -> f64 {
    params.p_tx
        * params.c_const()
        * bs.gain_main()
        * ue.gain_main()
        * dist.powf(-params.pathloss_exp)
        * (-params.absorption * dist).exp()
}

/// Distance at which the peak average received power equals `tau`.
pub fn ref_distance_from_power(
    params: &SystemParams,
    bs: &ArrayConfig,
    ue: &ArrayConfig,
    tau: f64,
) -> Result<f64, ClusterError> {
    if !(tau > 0.0) {
        return Err(ClusterError::InvalidThreshold { tau });
    }
    let max = peak_average_power(params, bs, ue, MIN_LINK_DISTANCE);
    if tau > max {
        return Err(ClusterError::ThresholdTooHigh { tau, max });
    }
    let alpha = params.pathloss_exp;
    let k = params.absorption;
    let scale = (params.p_tx * params.c_const() * bs.gain_main() * ue.gain_main() / tau).powf(1.0 / alpha);
    if k == 0.0 {
        return Ok(scale);
    }
    let w = lambert_w0(k / alpha * scale).expect("argument is positive");
    Ok(alpha / k * w)
}

/// `int_0^r t exp(-beta t) dt`.
pub fn los_area_integral(beta: f64, r: f64) -> f64 {
    let x = beta * r;
    if x < 1e-3 {
        // series keeps precision where 1 - e^-x (1 + x) cancels
        r * r * (0.5 - x / 3.0 + x * x / 8.0 - x * x * x / 30.0)
    } else {
        (-(-x).exp_m1() - x * (-x).exp()) / (beta * beta)
    }
}

/// Expected number of LOS BSs inside a disc of radius `r`.
pub fn expected_los_count(params: &SystemParams, r: f64) -> f64 {
    2.0 * PI * params.bs_density * los_area_integral(params.blockage_rate, r)
}

/// Probability that no LOS BS exists at all.
pub fn los_void_probability(params: &SystemParams) -> f64 {
    if params.blockage_rate == 0.0 {
        return 0.0;
    }
    (-2.0 * PI * params.bs_density / params.blockage_rate.powi(2)).exp()
}

/// `P(nearest LOS BS farther than r)`; includes the void event.
pub fn nearest_los_survival(params: &SystemParams, r: f64) -> f64 {
    (-expected_los_count(params, r)).exp()
}

/// Density of the distance to the nearest LOS BS (defective by the void
/// probability).
pub fn nearest_los_pdf(params: &SystemParams, r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    2.0 * PI * params.bs_density * r * (-params.blockage_rate * r).exp() * nearest_los_survival(params, r)
}

/// Density of the cluster radius `R = r / delta`, `delta f_r(delta R)`.
pub fn cluster_radius_pdf(params: &SystemParams, cfg: &ClusterConfig, radius: f64) -> f64 {
    cfg.delta * nearest_los_pdf(params, cfg.delta * radius)
}

/// Reference distance beyond which the nearest-LOS law, conditioned on at
/// least one LOS BS, keeps less than `tail` of its mass.
pub fn ref_distance_tail_bound(params: &SystemParams, tail: f64) -> f64 {
    let void = los_void_probability(params);
    let norm = 1.0 - void;
    let excess = |r: f64| (nearest_los_survival(params, r) - void) / norm;
    let mut hi = 1.0;
    while excess(hi) > tail && hi < 1e9 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) > tail {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-9 * hi {
            break;
        }
    }
    hi
}

/// Mean number of cluster BSs in the annulus `[delta R, R]`.
pub fn in_cluster_count_mean(params: &SystemParams, cfg: &ClusterConfig, radius: f64, mode: CountMode) -> f64 {
    let delta = cfg.delta;
    match mode {
        CountMode::Unthinned => PI * params.bs_density * radius * radius * (1.0 - delta * delta),
        CountMode::Thinned => {
            let beta = params.blockage_rate;
            2.0 * PI
                * params.bs_density
                * (los_area_integral(beta, radius) - los_area_integral(beta, delta * radius)).max(0.0)
        }
    }
}

pub fn poisson_pmf(mean: f64, q: u64) -> f64 {
    if mean == 0.0 {
        return if q == 0 { 1.0 } else { 0.0 };
    }
    let q = q as f64;
    (q * mean.ln() - mean - ln_gamma(q + 1.0)).exp()
}

pub fn in_cluster_count_pmf(
    params: &SystemParams,
    cfg: &ClusterConfig,
    radius: f64,
    q: u64,
    mode: CountMode,
) -> f64 {
    poisson_pmf(in_cluster_count_mean(params, cfg, radius, mode), q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::{integrate, QuadratureSpec};
    use approx::assert_relative_eq;

    fn arrays() -> (ArrayConfig, ArrayConfig) {
        let a = ArrayConfig::derive(8, 10f64.to_radians()).unwrap();
        (a, a)
    }

    fn bisect_distance(params: &SystemParams, bs: &ArrayConfig, ue: &ArrayConfig, tau: f64) -> f64 {
        let (mut lo, mut hi) = (MIN_LINK_DISTANCE, 1e5);
        for _ in 0..300 {
            let mid = 0.5 * (lo + hi);
            if peak_average_power(params, bs, ue, mid) > tau {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn delta_validation() {
        assert!(ClusterConfig::new(1.5).is_err());
        assert!(ClusterConfig::new(0.0).is_err());
        assert!(ClusterConfig::new(1.0).is_ok());
        let g = ClusterConfig::new(0.5).unwrap().geometry(10.0);
        assert_eq!(g.radius, 20.0);
    }

    #[test]
    fn ref_distance_round_trip() {
        let p = SystemParams::default();
        let (bs, ue) = arrays();
        let tau = peak_average_power(&p, &bs, &ue, 20.0);
        let r = ref_distance_from_power(&p, &bs, &ue, tau).unwrap();
        assert!((r - 20.0).abs() < 1e-6);
        let back = peak_average_power(&p, &bs, &ue, r);
        assert!(((back - tau) / tau).abs() < 1e-9);
    }

    #[test]
    fn ref_distance_matches_bisection() {
        let p = SystemParams::default();
        let (bs, ue) = arrays();
        let r = ref_distance_from_power(&p, &bs, &ue, 1e-12).unwrap();
        let oracle = bisect_distance(&p, &bs, &ue, 1e-12);
        assert!((r - oracle).abs() < 1e-6, "{r} vs {oracle}");
    }

    #[test]
    fn ref_distance_power_law_limit() {
        let p = SystemParams {
            absorption: 0.0,
            ..SystemParams::default()
        };
        let (bs, ue) = arrays();
        let tau = 3e-11;
        let expect = (p.c_const() * bs.gain_main() * ue.gain_main() * p.p_tx / tau).powf(1.0 / p.pathloss_exp);
        assert_relative_eq!(ref_distance_from_power(&p, &bs, &ue, tau).unwrap(), expect);
        let tiny = SystemParams {
            absorption: 1e-12,
            ..SystemParams::default()
        };
        assert_relative_eq!(
            ref_distance_from_power(&tiny, &bs, &ue, tau).unwrap(),
            expect,
            max_relative = 1e-9
        );
    }

    #[test]
    fn ref_distance_errors_and_monotone() {
        let p = SystemParams::default();
        let (bs, ue) = arrays();
        assert!(matches!(
            ref_distance_from_power(&p, &bs, &ue, 1.0),
            Err(ClusterError::ThresholdTooHigh { .. })
        ));
        assert!(ref_distance_from_power(&p, &bs, &ue, 0.0).is_err());
        let mut last = f64::INFINITY;
        for k in 0..40 {
            let tau = 1e-16 * 1.5f64.powi(k);
            let r = ref_distance_from_power(&p, &bs, &ue, tau).unwrap();
            assert!(r < last);
            last = r;
        }
    }

    #[test]
    fn radius_pdf_small_radius_is_linear() {
        let p = SystemParams::default();
        let cfg = ClusterConfig::new(0.6).unwrap();
        let a = cluster_radius_pdf(&p, &cfg, 1e-6);
        let b = cluster_radius_pdf(&p, &cfg, 2e-6);
        assert!(a < 1e-6);
        assert_relative_eq!(b / a, 2.0, max_relative = 1e-5);
    }

    #[test]
    fn radius_pdf_mass_is_one_minus_void() {
        let spec = QuadratureSpec::default();
        for &lambda in &[0.001, 0.005, 0.02] {
            for &delta in &[0.2, 0.6, 1.0] {
                let p = SystemParams {
                    bs_density: lambda,
                    ..SystemParams::default()
                };
                let cfg = ClusterConfig::new(delta).unwrap();
                let mass = integrate(|r| cluster_radius_pdf(&p, &cfg, r), 0.0, f64::INFINITY, &spec).unwrap();
                let expect = 1.0 - los_void_probability(&p);
                assert!((mass - expect).abs() < 1e-6, "lambda {lambda} delta {delta}: {mass}");
            }
        }
    }

    #[test]
    fn small_density_void_is_visible() {
        let p = SystemParams {
            bs_density: 1e-5,
            ..SystemParams::default()
        };
        let void = los_void_probability(&p);
        assert!(void > 0.2 && void < 0.5);
        assert_relative_eq!(nearest_los_survival(&p, 1e7), void, max_relative = 1e-12);
    }

    #[test]
    fn count_mean_example_and_equivalence() {
        let p = SystemParams::default();
        let cfg = ClusterConfig::new(0.6).unwrap();
        let mean = in_cluster_count_mean(&p, &cfg, 50.0, CountMode::Unthinned);
        assert!((mean - 25.13).abs() < 5e-3);
        for &(r, d, l) in &[(12.0, 0.3, 0.002), (77.0, 0.9, 0.03), (5.0, 0.05, 0.005)] {
            let q = SystemParams {
                bs_density: l,
                ..SystemParams::default()
            };
            let c = ClusterConfig::new(d).unwrap();
            let via_ref_dist = PI * l * (d * r) * (d * r) * (d.powi(-2) - 1.0);
            assert_relative_eq!(
                in_cluster_count_mean(&q, &c, r, CountMode::Unthinned),
                via_ref_dist,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn count_pmf_properties() {
        let p = SystemParams::default();
        let full = ClusterConfig::new(1.0).unwrap();
        assert_eq!(in_cluster_count_pmf(&p, &full, 40.0, 0, CountMode::Unthinned), 1.0);
        assert_eq!(in_cluster_count_pmf(&p, &full, 40.0, 3, CountMode::Thinned), 0.0);
        let cfg = ClusterConfig::new(0.6).unwrap();
        for mode in [CountMode::Unthinned, CountMode::Thinned] {
            let mean = in_cluster_count_mean(&p, &cfg, 50.0, mode);
            let top = (mean + 10.0 * mean.sqrt()).ceil() as u64;
            let total: f64 = (0..=top).map(|q| in_cluster_count_pmf(&p, &cfg, 50.0, q, mode)).sum();
            assert!((total - 1.0).abs() < 1e-10);
        }
        assert!(
            in_cluster_count_mean(&p, &cfg, 50.0, CountMode::Thinned)
                < in_cluster_count_mean(&p, &cfg, 50.0, CountMode::Unthinned)
        );
    }

    #[test]
    fn los_area_integral_branches_agree() {
        let beta = 1.0 / 141.4;
        let spec = QuadratureSpec::default();
        for &r in &[0.01, 0.1, 0.14, 0.15, 1.0, 100.0, 2000.0] {
            let quad = integrate(|t| t * (-beta * t).exp(), 0.0, r, &spec).unwrap();
            assert_relative_eq!(los_area_integral(beta, r), quad, max_relative = 1e-12);
        }
    }

    #[test]
    fn tail_bound_leaves_requested_mass() {
        let p = SystemParams::default();
        let r = ref_distance_tail_bound(&p, 1e-8);
        let void = los_void_probability(&p);
        let tail = (nearest_los_survival(&p, r) - void) / (1.0 - void);
        assert!(tail <= 1e-8 && tail > 1e-9);
    }
}
