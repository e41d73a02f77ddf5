//! Sectored antenna model, misalignment probability and composite link-gain
//! distributions.

use std::f64::consts::{PI, SQRT_2, TAU};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::specfun::q_function;

/// Numerator constant of the half-power beamwidth of a half-wavelength ULA.
const BEAMWIDTH_CONSTANT: f64 = 2.782;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AntennaError {
    #[error("array needs at least 2 elements for a sectored pattern, got {0}")]
    TooFewElements(u32),
    #[error("misalignment standard deviation must be finite and >= 0, got {0}")]
    InvalidSigma(f64),
    #[error("beamwidth must lie in (0, pi), got {0}")]
    InvalidBeamwidth(f64),
}

/// One side of a link (BS or user) under the two-level sectored pattern.
///
/// Fields are derived from the element count and kept private so they can
/// never disagree with it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayConfig {
    n_elements: u32,
    sigma_err: f64,
    beamwidth: f64,
    gain_main: f64,
    gain_side: f64,
}

/// `N^2 sin(3 pi / 2N)`, the main-to-side gain ratio.
fn lobe_ratio(n: u32) -> f64 {
    let n = f64::from(n);
    n * n * (3.0 * PI / (2.0 * n)).sin()
}

/// Beamwidth of an `n`-element half-wavelength uniform linear array.
pub fn beamwidth_for(n_elements: u32) -> f64 {
    2.0 * (BEAMWIDTH_CONSTANT / (PI * f64::from(n_elements))).asin()
}

fn sectored_gains(n: u32, beamwidth: f64) -> (f64, f64) {
    let ratio = lobe_ratio(n);
    let side = TAU / (beamwidth * ratio + (TAU - beamwidth));
    (ratio * side, side)
}

fn check_sigma(sigma_err: f64) -> Result<(), AntennaError> {
    if sigma_err.is_finite() && sigma_err >= 0.0 {
        Ok(())
    } else {
        Err(AntennaError::InvalidSigma(sigma_err))
    }
}

impl ArrayConfig {
    /// Array with `n_elements` elements and pointing-error deviation
    /// `sigma_err` (radians).
    pub fn derive(n_elements: u32, sigma_err: f64) -> Result<Self, AntennaError> {
        if n_elements < 2 {
            return Err(AntennaError::TooFewElements(n_elements));
        }
        check_sigma(sigma_err)?;
        let beamwidth = beamwidth_for(n_elements);
        let (gain_main, gain_side) = sectored_gains(n_elements, beamwidth);
        Ok(Self {
            n_elements,
            sigma_err,
            beamwidth,
            gain_main,
            gain_side,
        })
    }

    /// Array specified by a continuous beamwidth. The element count is the
    /// rounded inverse of the beamwidth law and enters the lobe gains only.
    pub fn from_beamwidth(beamwidth: f64, sigma_err: f64) -> Result<Self, AntennaError> {
        if !(beamwidth > 0.0 && beamwidth < PI) {
            return Err(AntennaError::InvalidBeamwidth(beamwidth));
        }
        check_sigma(sigma_err)?;
        let implied = BEAMWIDTH_CONSTANT / (PI * (beamwidth / 2.0).sin());
        let n_elements = (implied.round() as u32).max(2);
        let (gain_main, gain_side) = sectored_gains(n_elements, beamwidth);
        Ok(Self {
            n_elements,
            sigma_err,
            beamwidth,
            gain_main,
            gain_side,
        })
    }

    pub fn n_elements(&self) -> u32 {
        self.n_elements
    }

    pub fn sigma_err(&self) -> f64 {
        self.sigma_err
    }

    pub fn beamwidth(&self) -> f64 {
        self.beamwidth
    }

    pub fn gain_main(&self) -> f64 {
        self.gain_main
    }

    pub fn gain_side(&self) -> f64 {
        self.gain_side
    }

    /// Probability that the pointing error pushes the link into the side lobe.
    pub fn misalignment_prob(&self) -> f64 {
        misalignment_prob(self.beamwidth, self.sigma_err)
    }

    /// Pointing-error magnitude above which the link is misaligned.
    ///
    /// The closed-form error probability evaluates the Gaussian tail at
    /// `theta / sqrt(2 sigma^2)`, which is the tail event `|err| > theta/sqrt(2)`.
    pub fn misalignment_threshold(&self) -> f64 {
        self.beamwidth / SQRT_2
    }
}

/// Misalignment probability of a truncated-Gaussian pointing error on
/// `[-pi, pi]`.
pub fn misalignment_prob(beamwidth: f64, sigma_err: f64) -> f64 {
    if sigma_err == 0.0 {
        return 0.0;
    }
    let inside = 1.0 - 2.0 * q_function(beamwidth / (SQRT_2 * sigma_err));
    let support = 1.0 - 2.0 * q_function(PI / sigma_err);
    (1.0 - inside / support).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GainKind {
    Serving,
    Interferer,
}

/// Four-state composite gain `G_b * G_u` with state order
/// (main, main), (side, main), (main, side), (side, side).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainDistribution {
    pub kind: GainKind,
    pub gains: [f64; 4],
    pub probs: [f64; 4],
}

fn product_form(bs: &ArrayConfig, ue: &ArrayConfig, main_b: f64, main_u: f64) -> ([f64; 4], [f64; 4]) {
    let gains = [
        bs.gain_main * ue.gain_main,
        bs.gain_side * ue.gain_main,
        bs.gain_main * ue.gain_side,
        bs.gain_side * ue.gain_side,
    ];
    let probs = [
        main_b * main_u,
        (1.0 - main_b) * main_u,
        main_b * (1.0 - main_u),
        (1.0 - main_b) * (1.0 - main_u),
    ];
    (gains, probs)
}

/// Gain of a serving link, where each side independently lands in its side
/// lobe with its misalignment probability.
pub fn serving_gain_distribution(bs: &ArrayConfig, ue: &ArrayConfig) -> GainDistribution {
    let (gains, probs) = product_form(
        bs,
        ue,
        1.0 - bs.misalignment_prob(),
        1.0 - ue.misalignment_prob(),
    );
    GainDistribution {
        kind: GainKind::Serving,
        gains,
        probs,
    }
}

/// Gain of an interfering link: each side faces the other through its main
/// lobe with probability `theta / 2 pi`.
pub fn interferer_gain_distribution(bs: &ArrayConfig, ue: &ArrayConfig) -> GainDistribution {
    let (gains, probs) = product_form(
        bs,
        ue,
        (bs.beamwidth / TAU).min(1.0),
        (ue.beamwidth / TAU).min(1.0),
    );
    GainDistribution {
        kind: GainKind::Interferer,
        gains,
        probs,
    }
}

impl GainDistribution {
    /// `E[G^order]`.
    pub fn moment(&self, order: i32) -> f64 {
        self.gains
            .iter()
            .zip(&self.probs)
            .map(|(g, p)| p * g.powi(order))
            .sum()
    }

    pub fn mean(&self) -> f64 {
        self.moment(1)
    }

    /// Draws a state index in `0..4` and its gain by inverse CDF.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, f64) {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, (&g, &p)) in self.gains.iter().zip(&self.probs).enumerate() {
            acc += p;
            if u < acc {
                return (i, g);
            }
        }
        // u landed in the rounding gap above the last partial sum
        let last = self.probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
        (last, self.gains[last])
    }
}

pub fn gain_moment(d: &GainDistribution, order: i32) -> f64 {
    d.moment(order)
}

pub fn sample_gain<R: Rng + ?Sized>(d: &GainDistribution, rng: &mut R) -> (usize, f64) {
    d.sample(rng)
}

/// Pointing error drawn from `N(0, sigma^2)` truncated to `[-pi, pi]`.
pub fn sample_pointing_error<R: Rng + ?Sized>(sigma_err: f64, rng: &mut R) -> f64 {
    if sigma_err == 0.0 {
        return 0.0;
    }
    loop {
        let z: f64 = rng.sample(StandardNormal);
        let x = sigma_err * z;
        if x.abs() <= PI {
            return x;
        }
    }
}

fn state_index(main_b: bool, main_u: bool) -> usize {
    match (main_b, main_u) {
        (true, true) => 0,
        (false, true) => 1,
        (true, false) => 2,
        (false, false) => 3,
    }
}

/// Serving-link state realized from explicit pointing-error draws.
pub fn draw_serving_state<R: Rng + ?Sized>(
    bs: &ArrayConfig,
    ue: &ArrayConfig,
    rng: &mut R,
) -> usize {
    let main_b = sample_pointing_error(bs.sigma_err, rng).abs() <= bs.misalignment_threshold();
    let main_u = sample_pointing_error(ue.sigma_err, rng).abs() <= ue.misalignment_threshold();
    state_index(main_b, main_u)
}

/// Interfering-link state realized from uniform boresight angles on
/// `[-pi, pi]`.
pub fn draw_interferer_state<R: Rng + ?Sized>(
    bs: &ArrayConfig,
    ue: &ArrayConfig,
    rng: &mut R,
) -> usize {
    let angle_b: f64 = rng.random_range(-PI..PI);
    let angle_u: f64 = rng.random_range(-PI..PI);
    state_index(angle_b.abs() <= bs.beamwidth / 2.0, angle_u.abs() <= ue.beamwidth / 2.0)
}

/// Probability mass check used in tests and validation.
pub fn total_probability(d: &GainDistribution) -> f64 {
    d.probs.iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn deg(x: f64) -> f64 {
        x.to_radians()
    }

    #[test]
    fn eight_element_array() {
        let a = ArrayConfig::derive(8, 0.0).unwrap();
        assert!((a.beamwidth() - 0.22184).abs() < 1e-5);
        assert!((a.gain_main() - 16.02).abs() < 5e-3);
        assert!((a.gain_side() - 0.4504).abs() < 1e-4);
        assert!((a.gain_main() / a.gain_side() - 35.556).abs() < 1e-3);
    }

    #[test]
    fn normalization_pair_holds() {
        for n in 2..64 {
            let a = ArrayConfig::derive(n, 0.1).unwrap();
            let ratio = lobe_ratio(n);
            assert_relative_eq!(a.gain_main() / a.gain_side(), ratio, max_relative = 1e-12);
            let lhs = a.gain_side() * (a.beamwidth() * ratio + TAU - a.beamwidth());
            assert_relative_eq!(lhs, TAU, max_relative = 1e-12);
            assert!(a.beamwidth() > 0.0 && a.beamwidth() < PI);
            assert!(a.gain_main() > a.gain_side() && a.gain_side() > 0.0);
        }
    }

    #[test]
    fn single_element_rejected() {
        assert_eq!(ArrayConfig::derive(1, 0.0), Err(AntennaError::TooFewElements(1)));
        assert!(ArrayConfig::derive(8, -0.1).is_err());
        assert!(ArrayConfig::derive(8, f64::NAN).is_err());
    }

    #[test]
    fn continuous_beamwidth_rounds_element_count() {
        let a = ArrayConfig::from_beamwidth(beamwidth_for(8), 0.0).unwrap();
        assert_eq!(a.n_elements(), 8);
        assert_relative_eq!(a.gain_main(), ArrayConfig::derive(8, 0.0).unwrap().gain_main());
        let b = ArrayConfig::from_beamwidth(deg(40.0), 0.0).unwrap();
        assert_eq!(b.n_elements(), 3);
        assert_relative_eq!(b.beamwidth(), deg(40.0));
        assert!(ArrayConfig::from_beamwidth(PI, 0.0).is_err());
    }

    #[test]
    fn misalignment_examples() {
        assert_eq!(misalignment_prob(0.3, 0.0), 0.0);
        assert!((misalignment_prob(0.22184, deg(10.0)) - 0.3690).abs() < 2e-3);
        assert!(misalignment_prob(TAU - 1e-9, deg(10.0)) <= 1e-6);
    }

    #[test]
    fn misalignment_monotone_on_grid() {
        let thetas: Vec<f64> = (1..30).map(|k| 0.05 * f64::from(k)).collect();
        let sigmas: Vec<f64> = (1..30).map(|k| deg(1.0) * f64::from(k)).collect();
        for &t in &thetas {
            for w in sigmas.windows(2) {
                assert!(misalignment_prob(t, w[1]) >= misalignment_prob(t, w[0]));
            }
        }
        for &s in &sigmas {
            for w in thetas.windows(2) {
                assert!(misalignment_prob(w[1], s) <= misalignment_prob(w[0], s));
            }
        }
    }

    #[test]
    fn serving_distribution_examples() {
        let bs = ArrayConfig::derive(8, 0.0).unwrap();
        let d = serving_gain_distribution(&bs, &bs);
        assert_eq!(d.probs, [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(d.kind, GainKind::Serving);
        assert_relative_eq!(d.mean(), bs.gain_main() * bs.gain_main());

        let bs = ArrayConfig::derive(8, deg(10.0)).unwrap();
        let d = serving_gain_distribution(&bs, &bs);
        assert!((d.probs[0] - 0.3982).abs() < 3e-3);
        assert!((total_probability(&d) - 1.0).abs() < 1e-15);
        assert_eq!(d.gains[0], bs.gain_main() * bs.gain_main());
        assert_eq!(d.gains[3], bs.gain_side() * bs.gain_side());
    }

    #[test]
    fn interferer_distribution_examples() {
        let a = ArrayConfig::derive(8, deg(10.0)).unwrap();
        let d = interferer_gain_distribution(&a, &a);
        assert_eq!(d.kind, GainKind::Interferer);
        assert!((d.probs[0] - 1.2466e-3).abs() < 1e-5);
        assert!((total_probability(&d) - 1.0).abs() < 1e-15);
        assert!(d.moment(2) >= d.moment(1).powi(2));
    }

    #[test]
    fn isotropic_sides_always_face_main_lobe() {
        let iso = ArrayConfig {
            n_elements: 2,
            sigma_err: 0.0,
            beamwidth: TAU,
            gain_main: 1.0,
            gain_side: 1.0,
        };
        let d = interferer_gain_distribution(&iso, &iso);
        assert_eq!(d.probs[0], 1.0);
    }

    #[test]
    fn interferer_mean_matches_sampling() {
        let a = ArrayConfig::derive(8, deg(10.0)).unwrap();
        let d = interferer_gain_distribution(&a, &a);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 1_000_000;
        let mean = (0..n).map(|_| d.sample(&mut rng).1).sum::<f64>() / n as f64;
        let stderr = ((d.moment(2) - d.mean().powi(2)) / n as f64).sqrt();
        assert!((mean - d.mean()).abs() < 4.0 * stderr, "{mean} vs {}", d.mean());
    }

    #[test]
    fn degenerate_distribution_always_first_state() {
        let a = ArrayConfig::derive(8, 0.0).unwrap();
        let d = serving_gain_distribution(&a, &a);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            assert_eq!(d.sample(&mut rng).0, 0);
        }
    }

    #[test]
    fn sampling_is_reproducible() {
        let a = ArrayConfig::derive(8, deg(10.0)).unwrap();
        let d = serving_gain_distribution(&a, &a);
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..100).map(|_| d.sample(&mut rng).0).collect::<Vec<_>>()
        };
        assert_eq!(draw(3), draw(3));
    }

    #[test]
    fn explicit_pointing_draws_realize_serving_pmf() {
        let bs = ArrayConfig::derive(8, deg(10.0)).unwrap();
        let ue = ArrayConfig::derive(16, deg(5.0)).unwrap();
        let d = serving_gain_distribution(&bs, &ue);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 400_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[draw_serving_state(&bs, &ue, &mut rng)] += 1;
        }
        for (c, p) in counts.iter().zip(&d.probs) {
            let freq = *c as f64 / n as f64;
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((freq - p).abs() < 5.0 * se + 1e-12, "{freq} vs {p}");
        }
    }

    #[test]
    fn uniform_angles_realize_interferer_pmf() {
        let a = ArrayConfig::derive(4, 0.0).unwrap();
        let d = interferer_gain_distribution(&a, &a);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 400_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[draw_interferer_state(&a, &a, &mut rng)] += 1;
        }
        for (c, p) in counts.iter().zip(&d.probs) {
            let freq = *c as f64 / n as f64;
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((freq - p).abs() < 5.0 * se, "{freq} vs {p}");
        }
    }
}
