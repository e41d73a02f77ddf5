//! Terahertz propagation: spreading plus molecular absorption, gamma power
//! fading and Boolean line-of-sight blockage.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::specfun::ln_gamma;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("invalid system parameter `{name}` = {value}: {reason}")]
    InvalidParam {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("path loss is singular at distance {0} m")]
    Singular(f64),
}

/// Physical-layer constants shared by both backends. All quantities are SI
/// and linear.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Transmit power in watts.
    pub p_tx: f64,
    /// Carrier frequency in hertz.
    pub freq: f64,
    /// Molecular absorption coefficient in 1/m.
    pub absorption: f64,
    pub pathloss_exp: f64,
    /// BS density in 1/m^2.
    pub bs_density: f64,
    /// Boolean blockage rate in 1/m.
    pub blockage_rate: f64,
    pub fading_shape: f64,
    pub fading_scale: f64,
    /// Thermal noise power in watts.
    pub noise_power: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        let fading_shape = 2.0;
        Self {
            p_tx: 1.0,
            freq: 1e12,
            absorption: 0.06,
            pathloss_exp: 2.5,
            bs_density: 0.005,
            blockage_rate: 1.0 / 141.4,
            fading_shape,
            fading_scale: 1.0 / fading_shape,
            noise_power: 0.0,
        }
    }
}

fn positive(name: &'static str, value: f64) -> Result<(), ChannelError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(ChannelError::InvalidParam {
            name,
            value,
            reason: "must be finite and > 0",
        })
    }
}

fn non_negative(name: &'static str, value: f64) -> Result<(), ChannelError> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(ChannelError::InvalidParam {
            name,
            value,
            reason: "must be finite and >= 0",
        })
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<(), ChannelError> {
        positive("p_tx", self.p_tx)?;
        positive("freq", self.freq)?;
        positive("absorption", self.absorption)?;
        positive("pathloss_exp", self.pathloss_exp)?;
        positive("bs_density", self.bs_density)?;
        non_negative("blockage_rate", self.blockage_rate)?;
        positive("fading_scale", self.fading_scale)?;
        non_negative("noise_power", self.noise_power)?;
        if !(self.fading_shape.is_finite() && self.fading_shape >= 0.5) {
            return Err(ChannelError::InvalidParam {
                name: "fading_shape",
                value: self.fading_shape,
                reason: "Nakagami shape must be >= 0.5",
            });
        }
        Ok(())
    }

    /// Free-space constant `(c / 4 pi f)^2`.
    pub fn c_const(&self) -> f64 {
        let l = SPEED_OF_LIGHT / (4.0 * PI * self.freq);
        l * l
    }

    /// Sets the shape and picks the scale that keeps `E[xi] = 1`.
    pub fn with_unit_mean_fading(mut self, shape: f64) -> Self {
        self.fading_shape = shape;
        self.fading_scale = 1.0 / shape;
        self
    }
}

/// Large-scale gain `C x^-alpha exp(-k_a x)`.
pub fn path_loss(params: &SystemParams, dist: f64) -> Result<f64, ChannelError> {
    if !(dist > 0.0) {
        return Err(ChannelError::Singular(dist));
    }
    Ok(path_loss_unchecked(params, dist))
}

#[inline]
pub(crate) fn path_loss_unchecked(params: &SystemParams, dist: f64) -> f64 {
    params.c_const() * dist.powf(-params.pathloss_exp) * (-params.absorption * dist).exp()
}

/// How the fading parameter `Omega` enters moment expressions.
///
/// `Scale` is the Gamma(shape m, scale Omega) law the simulator draws from.
/// `Rate` treats `Omega` as a rate, giving `E[xi^n] = (m)_n / Omega^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FadingConvention {
    #[default]
    Scale,
    Rate,
}

impl FadingConvention {
    /// `E[xi^order]` for any non-negative integer order.
    pub fn moment(self, params: &SystemParams, order: u32) -> f64 {
        let m = params.fading_shape;
        let n = f64::from(order);
        let rising = (ln_gamma(m + n) - ln_gamma(m)).exp();
        match self {
            FadingConvention::Scale => rising * params.fading_scale.powi(order as i32),
            FadingConvention::Rate => rising / params.fading_scale.powi(order as i32),
        }
    }

    /// The value of `Omega` that makes the rate-style expressions coincide
    /// with this convention.
    pub fn rate_parameter(self, params: &SystemParams) -> f64 {
        match self {
            FadingConvention::Scale => 1.0 / params.fading_scale,
            FadingConvention::Rate => params.fading_scale,
        }
    }
}

/// Raw moment of the gamma power gain under the simulator's scale convention.
pub fn fading_moment(params: &SystemParams, order: u32) -> f64 {
    FadingConvention::Scale.moment(params, order)
}

/// Gamma(m, Omega) sampler for the power gain.
#[derive(Debug, Clone, Copy)]
pub struct FadingSampler {
    dist: Gamma<f64>,
}

impl FadingSampler {
    pub fn new(params: &SystemParams) -> Result<Self, ChannelError> {
        let dist = Gamma::new(params.fading_shape, params.fading_scale).map_err(|_| {
            ChannelError::InvalidParam {
                name: "fading_shape",
                value: params.fading_shape,
                reason: "not a valid gamma law",
            }
        })?;
        Ok(Self { dist })
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.dist.sample(rng)
    }
}

pub fn sample_fading<R: Rng + ?Sized>(params: &SystemParams, rng: &mut R) -> Result<f64, ChannelError> {
    Ok(FadingSampler::new(params)?.sample(rng))
}

/// Line-of-sight probability `exp(-beta d)`.
pub fn los_probability(params: &SystemParams, dist: f64) -> f64 {
    (-params.blockage_rate * dist.max(0.0)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn free_space_constant_at_one_terahertz() {
        let p = SystemParams::default();
        assert!((p.c_const() - 5.692e-10).abs() < 1e-12);
    }

    #[test]
    fn path_loss_examples() {
        let p = SystemParams::default();
        assert!((path_loss(&p, 10.0).unwrap() - 9.878e-13).abs() < 1e-15);
        let direct = p.c_const() * 10f64.powf(-2.5) * (-0.6f64).exp();
        assert_relative_eq!(path_loss(&p, 10.0).unwrap(), direct, max_relative = 1e-14);
        let q = SystemParams {
            absorption: 0.0,
            pathloss_exp: 3.7,
            ..p
        };
        assert_relative_eq!(path_loss(&q, 1.0).unwrap(), q.c_const());
        assert!(matches!(path_loss(&p, 0.0), Err(ChannelError::Singular(_))));
    }

    #[test]
    fn path_loss_log_linear() {
        let p = SystemParams::default();
        let ln_c = p.c_const().ln();
        for k in 1..200 {
            let x = 0.37 * f64::from(k);
            let v = path_loss(&p, x).unwrap().ln() + p.pathloss_exp * x.ln() + p.absorption * x;
            assert!((v - ln_c).abs() < 1e-12 * ln_c.abs());
        }
    }

    #[test]
    fn fading_moments() {
        let p = SystemParams::default().with_unit_mean_fading(1.0);
        assert_relative_eq!(fading_moment(&p, 1), 1.0);
        let p = SystemParams::default().with_unit_mean_fading(3.0);
        assert_relative_eq!(fading_moment(&p, 1), 1.0, max_relative = 1e-14);
        assert_relative_eq!(fading_moment(&p, 2), 4.0 / 3.0, max_relative = 1e-14);
        for m in [0.5, 1.0, 2.5, 7.0] {
            let p = SystemParams::default().with_unit_mean_fading(m);
            assert!(fading_moment(&p, 2) > fading_moment(&p, 1).powi(2));
        }
    }

    #[test]
    fn rate_convention_inverts_omega() {
        let p = SystemParams {
            fading_shape: 2.0,
            fading_scale: 0.5,
            ..SystemParams::default()
        };
        assert_relative_eq!(FadingConvention::Rate.moment(&p, 1), 4.0, max_relative = 1e-14);
        assert_relative_eq!(FadingConvention::Rate.moment(&p, 2), 24.0, max_relative = 1e-14);
    }

    #[test]
    fn fading_sample_moments() {
        let p = SystemParams {
            fading_shape: 5.0,
            fading_scale: 0.2,
            ..SystemParams::default()
        };
        let s = FadingSampler::new(&p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 1_000_000;
        let xs: Vec<f64> = (0..n).map(|_| s.sample(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - 1.0).abs() < 0.005);
        assert!((var / 0.2 - 1.0).abs() < 0.02);
    }

    #[test]
    fn fading_reproducible() {
        let p = SystemParams::default();
        let draw = || {
            let mut rng = ChaCha8Rng::seed_from_u64(4);
            (0..20).map(|_| sample_fading(&p, &mut rng).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(draw(), draw());
    }

    #[test]
    fn los_examples() {
        let p = SystemParams {
            blockage_rate: 1.0 / 141.4,
            ..SystemParams::default()
        };
        assert_eq!(los_probability(&p, 0.0), 1.0);
        assert!((los_probability(&p, 141.4) - 0.36788).abs() < 1e-5);
        let open = SystemParams {
            blockage_rate: 0.0,
            ..p
        };
        assert_eq!(los_probability(&open, 1234.0), 1.0);
        for (a, b) in [(3.0, 7.0), (100.0, 0.5), (0.0, 50.0)] {
            assert_relative_eq!(
                los_probability(&p, a + b),
                los_probability(&p, a) * los_probability(&p, b),
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn validation_names_the_field() {
        let p = SystemParams {
            bs_density: -1.0,
            ..SystemParams::default()
        };
        let err = p.validate().unwrap_err();
        assert!(err.to_string().contains("bs_density"));
        let p = SystemParams {
            fading_shape: 0.3,
            ..SystemParams::default()
        };
        assert!(p.validate().is_err());
        assert!(SystemParams::default().validate().is_ok());
    }
}
