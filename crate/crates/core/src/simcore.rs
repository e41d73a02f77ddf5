//! Monte Carlo simulator for the typical user at the origin.
//!
//! Trials are split into fixed-size chunks. Chunk `c` draws from
//! `ChaCha8Rng::seed_from_u64(seed)` on stream `c`, so results do not depend
//! on the number of worker threads.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::antenna::{
    draw_interferer_state, draw_serving_state, interferer_gain_distribution, serving_gain_distribution,
    ArrayConfig,
};
use crate::channel::{path_loss_unchecked, ChannelError, FadingSampler, SystemParams};
use crate::cluster::{los_area_integral, ClusterConfig, MIN_LINK_DISTANCE};

/// Trials per deterministic substream.
pub const CHUNK_TRIALS: u64 = 1024;

/// Smallest accepted `beta * window_radius`.
pub const MIN_WINDOW_DEPTH: f64 = 7.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("invalid simulation setting `{name}` = {value}: {reason}")]
    InvalidConfig {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("failed to write trial records: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, SimError>;

/// How BS locations are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampler {
    /// Draw the LOS-thinned process directly: Poisson count with mean
    /// `2 pi lambda int_0^W t exp(-beta t) dt` and radii from that density.
    #[default]
    LosOnly,
    /// Draw every BS in the disk, then mark each LOS independently.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub window_radius: f64,
    pub n_trials: u64,
    pub seed: u64,
    pub min_dist: f64,
    #[serde(default)]
    pub sampler: Sampler,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            window_radius: 1000.0,
            n_trials: 10_000,
            seed: 1,
            min_dist: MIN_LINK_DISTANCE,
            sampler: Sampler::LosOnly,
        }
    }
}

impl SimConfig {
    pub fn validate(&self, params: &SystemParams) -> Result<()> {
        params.validate()?;
        if !(self.window_radius.is_finite() && self.window_radius > 0.0) {
            return Err(SimError::InvalidConfig {
                name: "window_radius",
                value: self.window_radius,
                reason: "must be finite and > 0",
            });
        }
        if params.blockage_rate * self.window_radius < MIN_WINDOW_DEPTH {
            return Err(SimError::InvalidConfig {
                name: "window_radius",
                value: self.window_radius,
                reason: "blockage_rate * window_radius must be >= 7",
            });
        }
        if !(self.min_dist.is_finite() && self.min_dist > 0.0 && self.min_dist < self.window_radius) {
            return Err(SimError::InvalidConfig {
                name: "min_dist",
                value: self.min_dist,
                reason: "must lie in (0, window_radius)",
            });
        }
        Ok(())
    }
}

/// Every BS in the window and whether it is line of sight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub bs_positions: Vec<[f64; 2]>,
    pub los_flags: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkRealization {
    pub bs_positions: Vec<[f64; 2]>,
    pub los_flags: Vec<bool>,
    pub ref_index: usize,
    /// Includes `ref_index`.
    pub cluster_indices: Vec<usize>,
    /// Link state index (see `GainDistribution`) for LOS BSs: serving state
    /// for cluster members, interferer state otherwise.
    pub gain_states: Vec<Option<usize>>,
    pub fading: Vec<Option<f64>>,
    pub summary: TrialSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TrialOutcome {
    Realized(NetworkRealization),
    /// No LOS BS in the window; counted as outage.
    NoLineOfSight,
}

/// Scalar outputs of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub ref_dist: f64,
    pub radius: f64,
    /// Cooperating BSs besides the reference one.
    pub coop_count: u64,
    pub signal: f64,
    pub coop_signal: f64,
    pub interference: f64,
    /// `f64::INFINITY` when interference and noise are both zero.
    pub sinr: f64,
}

#[derive(Debug, Clone, Copy)]
struct LosBs {
    dist: f64,
    angle: f64,
    fading: f64,
    serving_state: usize,
    interferer_state: usize,
}

struct TrialContext {
    params: SystemParams,
    sim: SimConfig,
    delta: f64,
    serving_gains: [f64; 4],
    interferer_gains: [f64; 4],
    bs: ArrayConfig,
    ue: ArrayConfig,
    fading: FadingSampler,
    los_mean: f64,
}

impl TrialContext {
    fn new(
        params: &SystemParams,
        bs: &ArrayConfig,
        ue: &ArrayConfig,
        cfg: &ClusterConfig,
        sim: &SimConfig,
    ) -> Result<Self> {
        sim.validate(params)?;
        Ok(Self {
            params: *params,
            sim: *sim,
            delta: cfg.delta(),
            serving_gains: serving_gain_distribution(bs, ue).gains,
            interferer_gains: interferer_gain_distribution(bs, ue).gains,
            bs: *bs,
            ue: *ue,
            fading: FadingSampler::new(params)?,
            los_mean: 2.0 * PI * params.bs_density * los_area_integral(params.blockage_rate, sim.window_radius),
        })
    }

    fn draw_marks<R: Rng + ?Sized>(&self, dist: f64, angle: f64, rng: &mut R) -> LosBs {
        let fading = self.fading.sample(rng);
        let serving_state = draw_serving_state(&self.bs, &self.ue, rng);
        let interferer_state = draw_interferer_state(&self.bs, &self.ue, rng);
        LosBs {
            dist,
            angle,
            fading,
            serving_state,
            interferer_state,
        }
    }

    /// Fills `out` with the LOS BSs of one trial. Returns the full network
    /// when the full sampler is active.
    fn draw_trial<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<LosBs>) -> Option<Network> {
        out.clear();
        match self.sim.sampler {
            Sampler::LosOnly => {
                let count = poisson_draw(self.los_mean, rng);
                for _ in 0..count {
                    let dist = sample_los_radius(self.params.blockage_rate, 0.0, self.sim.window_radius, rng);
                    let angle = rng.random_range(-PI..PI);
                    out.push(self.draw_marks(dist, angle, rng));
                }
                None
            }
            Sampler::Full => {
                let net = realize_network_inner(&self.params, &self.sim, rng);
                for (pos, &los) in net.bs_positions.iter().zip(&net.los_flags) {
                    if los {
                        let dist = pos[0].hypot(pos[1]);
                        out.push(self.draw_marks(dist, pos[1].atan2(pos[0]), rng));
                    }
                }
                Some(net)
            }
        }
    }

    fn received(&self, gain: f64, bs: &LosBs) -> f64 {
        self.params.p_tx * gain * bs.fading * path_loss_unchecked(&self.params, bs.dist.max(self.sim.min_dist))
    }

    fn evaluate(&self, los: &[LosBs]) -> Option<(usize, TrialSummary)> {
        let (ref_idx, nearest) = los
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.dist.total_cmp(&b.1.dist))?;
        let radius = nearest.dist / self.delta;
        let signal = self.received(self.serving_gains[nearest.serving_state], nearest);
        let mut coop_signal = 0.0;
        let mut coop_count = 0;
        let mut interference = 0.0;
        for (k, b) in los.iter().enumerate() {
            if k == ref_idx {
                continue;
            }
            if b.dist <= radius {
                coop_signal += self.received(self.serving_gains[b.serving_state], b);
                coop_count += 1;
            } else {
                interference += self.received(self.interferer_gains[b.interferer_state], b);
            }
        }
        let denom = interference + self.params.noise_power;
        let sinr = if denom > 0.0 {
            (signal + coop_signal) / denom
        } else {
            f64::INFINITY
        };
        Some((
            ref_idx,
            TrialSummary {
                ref_dist: nearest.dist,
                radius,
                coop_count,
                signal,
                coop_signal,
                interference,
                sinr,
            },
        ))
    }
}

fn poisson_draw<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    // rand_distr's Poisson returns an integral f64
    Poisson::new(mean).map(|p| p.sample(rng) as u64).unwrap_or(0)
}

/// Radius with density proportional to `t exp(-beta t)` on `[lo, hi]`.
fn sample_los_radius<R: Rng + ?Sized>(beta: f64, lo: f64, hi: f64, rng: &mut R) -> f64 {
    if beta == 0.0 {
        let u: f64 = rng.random();
        return (lo * lo + u * (hi * hi - lo * lo)).sqrt();
    }
    loop {
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        let t = -((1.0 - u1).ln() + (1.0 - u2).ln()) / beta;
        if t >= lo && t <= hi {
            return t;
        }
    }
}

fn realize_network_inner<R: Rng + ?Sized>(params: &SystemParams, sim: &SimConfig, rng: &mut R) -> Network {
    let w = sim.window_radius;
    let count = poisson_draw(params.bs_density * PI * w * w, rng) as usize;
    let mut bs_positions = Vec::with_capacity(count);
    let mut los_flags = Vec::with_capacity(count);
    for _ in 0..count {
        let r = w * rng.random::<f64>().sqrt();
        let phi = rng.random_range(0.0..TAU);
        let los = rng.random::<f64>() < (-params.blockage_rate * r).exp();
        bs_positions.push([r * phi.cos(), r * phi.sin()]);
        los_flags.push(los);
    }
    Network { bs_positions, los_flags }
}

/// Homogeneous PPP in the window disk with independent LOS marks.
pub fn realize_network<R: Rng + ?Sized>(params: &SystemParams, sim: &SimConfig, rng: &mut R) -> Result<Network> {
    sim.validate(params)?;
    Ok(realize_network_inner(params, sim, rng))
}

/// One trial: reference BS, cluster, gains, fading and SINR.
pub fn run_trial<R: Rng + ?Sized>(
    params: &SystemParams,
    bs: &ArrayConfig,
    ue: &ArrayConfig,
    cfg: &ClusterConfig,
    sim: &SimConfig,
    rng: &mut R,
) -> Result<TrialOutcome> {
    let ctx = TrialContext::new(params, bs, ue, cfg, sim)?;
    let mut los = Vec::new();
    let net = ctx.draw_trial(rng, &mut los);
    Ok(build_realization(&ctx, &los, net))
}

fn build_realization(ctx: &TrialContext, los: &[LosBs], net: Option<Network>) -> TrialOutcome {
    let Some((ref_los, summary)) = ctx.evaluate(los) else {
        return TrialOutcome::NoLineOfSight;
    };
    // map LOS list positions onto network indices
    let (bs_positions, los_flags, los_to_net) = match net {
        Some(net) => {
            let map: Vec<usize> = net
                .los_flags
                .iter()
                .enumerate()
                .filter_map(|(i, &l)| l.then_some(i))
                .collect();
            (net.bs_positions, net.los_flags, map)
        }
        None => {
            let pos = los
                .iter()
                .map(|b| [b.dist * b.angle.cos(), b.dist * b.angle.sin()])
                .collect();
            (pos, vec![true; los.len()], (0..los.len()).collect())
        }
    };
    let n = bs_positions.len();
    let mut gain_states = vec![None; n];
    let mut fading = vec![None; n];
    let mut cluster_indices = Vec::new();
    for (k, b) in los.iter().enumerate() {
        let idx = los_to_net[k];
        fading[idx] = Some(b.fading);
        if k == ref_los || b.dist <= summary.radius {
            cluster_indices.push(idx);
            gain_states[idx] = Some(b.serving_state);
        } else {
            gain_states[idx] = Some(b.interferer_state);
        }
    }
    TrialOutcome::Realized(NetworkRealization {
        bs_positions,
        los_flags,
        ref_index: los_to_net[ref_los],
        cluster_indices,
        gain_states,
        fading,
        summary,
    })
}

fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

fn chunk_ranges(n_trials: u64) -> Vec<(u64, u64)> {
    (0..n_trials.div_ceil(CHUNK_TRIALS))
        .map(|c| (c, CHUNK_TRIALS.min(n_trials - c * CHUNK_TRIALS)))
        .collect()
}

/// Runs every trial and hands each summary (`None` for LOS-void trials) to
/// a per-chunk fold; the chunk results come back in chunk order.
fn fold_trials<T, F>(ctx: &TrialContext, fold: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut Option<T>, Option<TrialSummary>) + Sync,
{
    chunk_ranges(ctx.sim.n_trials)
        .into_par_iter()
        .map(|(chunk, len)| {
            let mut rng = chunk_rng(ctx.sim.seed, chunk);
            let mut buf = Vec::new();
            let mut acc = None;
            for _ in 0..len {
                ctx.draw_trial(&mut rng, &mut buf);
                fold(&mut acc, ctx.evaluate(&buf).map(|(_, s)| s));
            }
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// Summaries of all trials in order.
pub fn simulate_trials(
    params: &SystemParams,
    bs: &ArrayConfig,
    ue: &ArrayConfig,
    cfg: &ClusterConfig,
    sim: &SimConfig,
) -> Result<Vec<Option<TrialSummary>>> {
    let ctx = TrialContext::new(params, bs, ue, cfg, sim)?;
    let chunks = fold_trials(&ctx, |acc: &mut Option<Vec<Option<TrialSummary>>>, s| {
        acc.get_or_insert_with(Vec::new).push(s)
    });
    Ok(chunks.into_iter().flatten().collect())
}

/// Detailed realization of trial `index` of the run described by `sim`.
pub fn realize_trial(
    params: &SystemParams,
    bs: &ArrayConfig,
    ue: &ArrayConfig,
    cfg: &ClusterConfig,
    sim: &SimConfig,
    index: u64,
) -> Result<TrialOutcome> {
    let ctx = TrialContext::new(params, bs, ue, cfg, sim)?;
    let mut rng = chunk_rng(sim.seed, index / CHUNK_TRIALS);
    let mut buf = Vec::new();
    for _ in 0..index % CHUNK_TRIALS {
        ctx.draw_trial(&mut rng, &mut buf);
    }
    let net = ctx.draw_trial(&mut rng, &mut buf);
    Ok(build_realization(&ctx, &buf, net))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoveragePoint {
    /// Linear SINR threshold.
    pub gamma: f64,
    /// Fraction of all trials with SINR above `gamma`.
    pub probability: f64,
    pub stderr: f64,
    /// Same, over trials with at least one LOS BS.
    pub conditioned: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageEstimate {
    pub points: Vec<CoveragePoint>,
    pub n_trials: u64,
    pub void_trials: u64,
}

/// Empirical coverage for every threshold in one pass over the trials.
pub fn estimate_coverage(
    params: &SystemParams,
    bs: &ArrayConfig,
    ue: &ArrayConfig,
    cfg: &ClusterConfig,
    sim: &SimConfig,
    gamma_grid: &[f64],
) -> Result<CoverageEstimate> {
    if sim.n_trials < 100 {
        return Err(SimError::InvalidConfig {
            name: "n_trials",
            value: sim.n_trials as f64,
            reason: "coverage estimates need at least 100 trials",
        });
    }
    let ctx = TrialContext::new(params, bs, ue, cfg, sim)?;
    let k = gamma_grid.len();
    let chunks = fold_trials(&ctx, |acc: &mut Option<(Vec<u64>, u64)>, s| {
        let (hits, void) = acc.get_or_insert_with(|| (vec![0; k], 0));
        match s {
            Some(s) => {
                for (h, &g) in hits.iter_mut().zip(gamma_grid) {
                    if s.sinr > g {
                        *h += 1;
                    }
                }
            }
            None => *void += 1,
        }
    });
    let mut hits = vec![0u64; k];
    let mut void_trials = 0;
    for (h, v) in chunks {
        for (a, b) in hits.iter_mut().zip(h) {
            *a += b;
        }
        void_trials += v;
    }
    let n = sim.n_trials as f64;
    let live = (sim.n_trials - void_trials) as f64;
    let points = gamma_grid
        .iter()
        .zip(&hits)
        .map(|(&gamma, &h)| {
            let p = h as f64 / n;
            CoveragePoint {
                gamma,
                probability: p,
                stderr: (p * (1.0 - p) / n).sqrt(),
                conditioned: if live > 0.0 { h as f64 / live } else { 0.0 },
            }
        })
        .collect();
    Ok(CoverageEstimate {
        points,
        n_trials: sim.n_trials,
        void_trials,
    })
}

fn check_radius(radius: f64) -> Result<()> {
    if radius.is_finite() && radius > 0.0 {
        Ok(())
    } else {
        Err(SimError::InvalidConfig {
            name: "radius",
            value: radius,
            reason: "must be finite and > 0",
        })
    }
}

/// Draws `sim.n_trials` aggregate powers from LOS BSs in `[lo, hi]` with the
/// given gain table.
fn annulus_samples(
    params: &SystemParams,
    sim: &SimConfig,
    gains: crate::antenna::GainDistribution,
    lo: f64,
    hi: f64,
) -> Result<Vec<f64>> {
    sim.validate(params)?;
    let fading = FadingSampler::new(params)?;
    let beta = params.blockage_rate;
    let hi = hi.min(sim.window_radius);
    if lo >= hi {
        return Ok(vec![0.0; sim.n_trials as usize]);
    }
    let mean = 2.0 * PI * params.bs_density * (los_area_integral(beta, hi) - los_area_integral(beta, lo));
    let out = chunk_ranges(sim.n_trials)
        .into_par_iter()
        .map(|(chunk, len)| {
            let mut rng = chunk_rng(sim.seed, chunk);
            (0..len)
                .map(|_| {
                    let count = poisson_draw(mean, &mut rng);
                    (0..count)
                        .map(|_| {
                            let d = sample_los_radius(beta, lo, hi, &mut rng);
                            let xi = fading.sample(&mut rng);
                            let (_, g) = gains.sample(&mut rng);
                            params.p_tx * g * xi * path_loss_unchecked(params, d.max(sim.min_dist))
                        })
                        .sum::<f64>()
                })
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>();
    Ok(out.into_iter().flatten().collect())
}

/// Interference samples with the exclusion radius pinned at `radius`.
pub fn collect_interference_samples(
    params: &SystemParams,
    bs: &ArrayConfig,
    ue: &ArrayConfig,
    sim: &SimConfig,
    radius: f64,
) -> Result<Vec<f64>> {
    check_radius(radius)?;
    annulus_samples(params, sim, interferer_gain_distribution(bs, ue), radius, f64::INFINITY)
}

/// Aggregate cooperative signal samples from the annulus `[delta R, R]`.
pub fn collect_signal_samples(
    params: &SystemParams,
    bs: &ArrayConfig,
    ue: &ArrayConfig,
    cfg: &ClusterConfig,
    sim: &SimConfig,
    radius: f64,
) -> Result<Vec<f64>> {
    check_radius(radius)?;
    annulus_samples(params, sim, serving_gain_distribution(bs, ue), cfg.delta() * radius, radius)
}

/// One CSV row of the raw trial dump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub ref_dist_m: Option<f64>,
    pub radius_m: Option<f64>,
    pub coop_count: Option<u64>,
    pub signal_w: Option<f64>,
    pub coop_signal_w: Option<f64>,
    pub interference_w: Option<f64>,
    pub sinr: Option<f64>,
}

impl TrialRecord {
    fn new(trial: u64, s: Option<TrialSummary>) -> Self {
        Self {
            trial,
            ref_dist_m: s.map(|s| s.ref_dist),
            radius_m: s.map(|s| s.radius),
            coop_count: s.map(|s| s.coop_count),
            signal_w: s.map(|s| s.signal),
            coop_signal_w: s.map(|s| s.coop_signal),
            interference_w: s.map(|s| s.interference),
            sinr: s.map(|s| s.sinr),
        }
    }
}

/// Writes one record per trial; LOS-void trials have empty fields.
pub fn dump_trials<W: Write>(
    params: &SystemParams,
    bs: &ArrayConfig,
    ue: &ArrayConfig,
    cfg: &ClusterConfig,
    sim: &SimConfig,
    writer: W,
) -> Result<()> {
    let trials = simulate_trials(params, bs, ue, cfg, sim)?;
    let mut w = csv::Writer::from_writer(writer);
    for (i, s) in trials.into_iter().enumerate() {
        w.serialize(TrialRecord::new(i as u64, s))
            .map_err(|e| SimError::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| SimError::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (SystemParams, ArrayConfig, SimConfig) {
        let a = ArrayConfig::derive(8, 10f64.to_radians()).unwrap();
        let sim = SimConfig {
            n_trials: 200,
            seed: 11,
            ..SimConfig::default()
        };
        (SystemParams::default(), a, sim)
    }

    #[test]
    fn window_depth_enforced() {
        let (p, _, sim) = setup();
        let small = SimConfig {
            window_radius: 500.0,
            ..sim
        };
        assert!(small.validate(&p).is_err());
        assert!(sim.validate(&p).is_ok());
    }

    #[test]
    fn full_cooperation_off_has_single_member() {
        let (p, a, sim) = setup();
        let cfg = ClusterConfig::new(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            match run_trial(&p, &a, &a, &cfg, &sim, &mut rng).unwrap() {
                TrialOutcome::Realized(r) => {
                    assert_eq!(r.cluster_indices, vec![r.ref_index]);
                    assert_eq!(r.summary.coop_signal, 0.0);
                    assert_eq!(r.summary.coop_count, 0);
                }
                TrialOutcome::NoLineOfSight => panic!("void trial at default density"),
            }
        }
    }

    #[test]
    fn realize_trial_matches_stream() {
        let (p, a, sim) = setup();
        let cfg = ClusterConfig::new(0.5).unwrap();
        let all = simulate_trials(&p, &a, &a, &cfg, &sim).unwrap();
        for idx in [0u64, 7, 150] {
            match realize_trial(&p, &a, &a, &cfg, &sim, idx).unwrap() {
                TrialOutcome::Realized(r) => assert_eq!(Some(r.summary), all[idx as usize]),
                TrialOutcome::NoLineOfSight => assert!(all[idx as usize].is_none()),
            }
        }
    }

    #[test]
    fn lone_bs_without_noise_is_always_covered() {
        let p = SystemParams {
            bs_density: 1e-7,
            ..SystemParams::default()
        };
        let (_, a, sim) = setup();
        let sim = SimConfig { n_trials: 3000, ..sim };
        let cfg = ClusterConfig::new(1.0).unwrap();
        let trials = simulate_trials(&p, &a, &a, &cfg, &sim).unwrap();
        let lone: Vec<_> = trials.iter().flatten().filter(|s| s.interference == 0.0).collect();
        assert!(!lone.is_empty());
        assert!(lone.iter().all(|s| s.sinr == f64::INFINITY));
        let est = estimate_coverage(&p, &a, &a, &cfg, &sim, &[1e300]).unwrap();
        assert!(est.void_trials > 0);
        assert!(est.points[0].conditioned > 0.0);
    }

    #[test]
    fn too_few_trials_rejected() {
        let (p, a, sim) = setup();
        let sim = SimConfig { n_trials: 99, ..sim };
        let cfg = ClusterConfig::new(1.0).unwrap();
        assert!(estimate_coverage(&p, &a, &a, &cfg, &sim, &[1.0]).is_err());
    }

    #[test]
    fn dump_has_one_row_per_trial() {
        let (p, a, sim) = setup();
        let cfg = ClusterConfig::new(0.6).unwrap();
        let mut buf = Vec::new();
        dump_trials(&p, &a, &a, &cfg, &sim, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), sim.n_trials as usize + 1);
        assert!(text.starts_with("trial,ref_dist_m,radius_m,coop_count,signal_w,coop_signal_w,interference_w,sinr"));
    }
}
