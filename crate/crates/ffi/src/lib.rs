//! C interface to the `thzcov` coverage engine.
//!
//! Every fallible function returns a [`ThzStatus`] and writes results through
//! out-pointers. On failure, [`thz_last_error`] describes the problem for the
//! calling thread. Quantities are SI and linear: watts, hertz, metres,
//! radians.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use thzcov::analytic::{coverage_probability, interference_moments, AnalyticOptions, CoverageQuery, MomentMode};
use thzcov::antenna::{interferer_gain_distribution, ArrayConfig};
use thzcov::channel::SystemParams;
use thzcov::cluster::ClusterConfig;
use thzcov::simcore::{estimate_coverage, SimConfig};
use thzcov::specfun;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThzStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NumericalFailure = 3,
    Panic = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThzMomentMode {
    Corrected = 0,
    Paper = 1,
}

impl From<ThzMomentMode> for MomentMode {
    fn from(m: ThzMomentMode) -> Self {
        match m {
            ThzMomentMode::Corrected => MomentMode::CampbellCorrected,
            ThzMomentMode::Paper => MomentMode::PaperFaithful,
        }
    }
}

/// Plain description of a scenario.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThzScenarioParams {
    pub p_tx_w: f64,
    pub freq_hz: f64,
    /// Molecular absorption coefficient, 1/m.
    pub absorption: f64,
    pub pathloss_exp: f64,
    /// BSs per square metre.
    pub bs_density: f64,
    /// Blockage rate, 1/m.
    pub blockage_rate: f64,
    pub fading_shape: f64,
    pub fading_scale: f64,
    pub noise_w: f64,
    pub n_b: u32,
    pub n_u: u32,
    pub sigma_b_rad: f64,
    pub sigma_u_rad: f64,
    /// Clustering parameter in (0, 1].
    pub delta: f64,
}

/// Opaque validated scenario.
pub struct ThzScenario {
    params: SystemParams,
    bs: ArrayConfig,
    ue: ArrayConfig,
    cluster: ClusterConfig,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(ThzStatus, String);

fn invalid(e: impl std::fmt::Display) -> Failure {
    Failure(ThzStatus::InvalidArgument, e.to_string())
}

fn numerical(e: impl std::fmt::Display) -> Failure {
    Failure(ThzStatus::NumericalFailure, e.to_string())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> ThzStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ThzStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            ThzStatus::Panic
        }
    }
}

unsafe fn write<T>(out: *mut T, value: T, name: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(ThzStatus::NullPointer, format!("`{name}` is null")));
    }
    out.write(value);
    Ok(())
}

unsafe fn scenario<'a>(s: *const ThzScenario) -> Result<&'a ThzScenario, Failure> {
    s.as_ref()
        .ok_or_else(|| Failure(ThzStatus::NullPointer, "scenario handle is null".into()))
}

/// Message for the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn thz_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn thz_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Fills `out` with the default scenario (30 dBm, 1 THz, 8x8 arrays,
/// 10 degree misalignment, delta 0.6).
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn thz_scenario_params_default(out: *mut ThzScenarioParams) -> ThzStatus {
    guard(|| {
        let p = SystemParams::default();
        let sigma = 10f64.to_radians();
        let params = ThzScenarioParams {
            p_tx_w: p.p_tx,
            freq_hz: p.freq,
            absorption: p.absorption,
            pathloss_exp: p.pathloss_exp,
            bs_density: p.bs_density,
            blockage_rate: p.blockage_rate,
            fading_shape: p.fading_shape,
            fading_scale: p.fading_scale,
            noise_w: p.noise_power,
            n_b: 8,
            n_u: 8,
            sigma_b_rad: sigma,
            sigma_u_rad: sigma,
            delta: 0.6,
        };
        write(out, params, "out")
    })
}

/// Validates `params` and allocates a scenario. Release it with
/// [`thz_scenario_free`].
///
/// # Safety
/// `params` must be null or point to a valid struct; `out` must be null or
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn thz_scenario_new(params: *const ThzScenarioParams, out: *mut *mut ThzScenario) -> ThzStatus {
    guard(|| {
        let p = params
            .as_ref()
            .ok_or_else(|| Failure(ThzStatus::NullPointer, "`params` is null".into()))?;
        if out.is_null() {
            return Err(Failure(ThzStatus::NullPointer, "`out` is null".into()));
        }
        let system = SystemParams {
            p_tx: p.p_tx_w,
            freq: p.freq_hz,
            absorption: p.absorption,
            pathloss_exp: p.pathloss_exp,
            bs_density: p.bs_density,
            blockage_rate: p.blockage_rate,
            fading_shape: p.fading_shape,
            fading_scale: p.fading_scale,
            noise_power: p.noise_w,
        };
        system.validate().map_err(invalid)?;
        let handle = ThzScenario {
            params: system,
            bs: ArrayConfig::derive(p.n_b, p.sigma_b_rad).map_err(invalid)?,
            ue: ArrayConfig::derive(p.n_u, p.sigma_u_rad).map_err(invalid)?,
            cluster: ClusterConfig::new(p.delta).map_err(invalid)?,
        };
        write(out, Box::into_raw(Box::new(handle)), "out")
    })
}

/// Releases a scenario; null is ignored.
///
/// # Safety
/// `s` must be null or a handle from [`thz_scenario_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn thz_scenario_free(s: *mut ThzScenario) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Analytic coverage probability at the linear SINR threshold.
///
/// # Safety
/// `s` must be null or a live handle; `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn thz_coverage_analytic(
    s: *const ThzScenario,
    sinr_threshold: f64,
    mode: ThzMomentMode,
    out: *mut f64,
) -> ThzStatus {
    guard(|| {
        let sc = scenario(s)?;
        let query = CoverageQuery::new(sinr_threshold).with_options(AnalyticOptions::for_mode(mode.into()));
        let res = coverage_probability(&sc.params, &sc.bs, &sc.ue, &sc.cluster, &query).map_err(|e| match e {
            thzcov::analytic::AnalyticError::InvalidQuery(_) => invalid(e),
            _ => numerical(e),
        })?;
        write(out, res.probability, "out")
    })
}

/// Monte Carlo coverage estimate and its standard error.
///
/// # Safety
/// `s` must be null or a live handle; the out-pointers must be null or
/// valid for writes. `out_stderr` may be null if not wanted.
#[no_mangle]
pub unsafe extern "C" fn thz_coverage_monte_carlo(
    s: *const ThzScenario,
    sinr_threshold: f64,
    n_trials: u64,
    seed: u64,
    out_probability: *mut f64,
    out_stderr: *mut f64,
) -> ThzStatus {
    guard(|| {
        let sc = scenario(s)?;
        if !(sinr_threshold >= 0.0) {
            return Err(invalid(format!("SINR threshold must be >= 0, got {sinr_threshold}")));
        }
        if out_probability.is_null() {
            return Err(Failure(ThzStatus::NullPointer, "`out_probability` is null".into()));
        }
        let sim = SimConfig {
            n_trials,
            seed,
            ..SimConfig::default()
        };
        let est = estimate_coverage(&sc.params, &sc.bs, &sc.ue, &sc.cluster, &sim, &[sinr_threshold]).map_err(invalid)?;
        let pt = est.points[0];
        write(out_probability, pt.probability, "out_probability")?;
        if !out_stderr.is_null() {
            out_stderr.write(pt.stderr);
        }
        Ok(())
    })
}

/// Mean and variance of the interference beyond `radius` metres.
///
/// # Safety
/// `s` must be null or a live handle; the out-pointers must be null or
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn thz_interference_moments(
    s: *const ThzScenario,
    radius: f64,
    mode: ThzMomentMode,
    out_mean: *mut f64,
    out_variance: *mut f64,
) -> ThzStatus {
    guard(|| {
        let sc = scenario(s)?;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid(format!("radius must be finite and > 0, got {radius}")));
        }
        let opts = AnalyticOptions::for_mode(mode.into());
        let gains = interferer_gain_distribution(&sc.bs, &sc.ue);
        let st = interference_moments(&sc.params, &gains, radius, opts.moments, opts.convention).map_err(numerical)?;
        write(out_mean, st.mean, "out_mean")?;
        write(out_variance, st.variance, "out_variance")
    })
}

/// Principal-branch Lambert W.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn thz_lambert_w0(x: f64, out: *mut f64) -> ThzStatus {
    guard(|| write(out, specfun::lambert_w0(x).map_err(invalid)?, "out"))
}

/// Upper incomplete gamma `Gamma(a, x)` for any real `a` and `x > 0`.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn thz_upper_incomplete_gamma(a: f64, x: f64, out: *mut f64) -> ThzStatus {
    guard(|| write(out, specfun::upper_incomplete_gamma(a, x).map_err(invalid)?, "out"))
}

/// Gaussian tail probability `Q(z)`.
#[no_mangle]
pub extern "C" fn thz_q_function(z: f64) -> f64 {
    specfun::q_function(z)
}
