//! Built-in run specifications for the four figure families.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::runspec::{arithmetic_grid, Backend, RunSpec, SweepDim, SweepName};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Coverage vs SINR threshold for several clustering parameters.
    Fig1,
    /// Coverage vs BS beamwidth for several BS misalignment levels.
    Fig2,
    /// Coverage vs BS misalignment for several clustering parameters.
    Fig3,
    /// Coverage vs BS density for several BS array sizes.
    Fig4,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Fig1, Preset::Fig2, Preset::Fig3, Preset::Fig4];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig1 => "fig1",
            Preset::Fig2 => "fig2",
            Preset::Fig3 => "fig3",
            Preset::Fig4 => "fig4",
        }
    }

    pub fn spec(self) -> RunSpec {
        let mut spec = RunSpec {
            backends: vec![Backend::Analytic, Backend::Mc],
            ..RunSpec::default()
        };
        spec.sim.n_trials = 10_000;
        let deltas = vec![1.0, 0.6, 0.4, 0.2];
        match self {
            Preset::Fig1 => {
                spec.sweep = vec![
                    dim(SweepName::Delta, deltas),
                    dim(SweepName::GammaDb, grid(-10.0, 20.0, 2.5)),
                ];
            }
            Preset::Fig2 => {
                spec.base.delta = 1.0;
                spec.base.gamma_db = 25.0;
                spec.paired = true;
                spec.sweep = vec![
                    dim(SweepName::SigmaBDeg, vec![0.0, 10.0, 20.0]),
                    dim(SweepName::ThetaBDeg, grid(2.0, 40.0, 2.0)),
                ];
            }
            Preset::Fig3 => {
                spec.base.gamma_db = 0.0;
                spec.paired = true;
                spec.sweep = vec![
                    dim(SweepName::Delta, deltas),
                    dim(SweepName::SigmaBDeg, grid(0.0, 30.0, 2.0)),
                ];
            }
            Preset::Fig4 => {
                spec.base.delta = 0.6;
                spec.base.sigma_b_deg = 5.0;
                spec.base.sigma_u_deg = 5.0;
                spec.base.noise_dbm = Some(-92.0);
                spec.base.gamma_db = 20.0;
                spec.sweep = vec![
                    dim(SweepName::NB, vec![8.0, 12.0, 16.0]),
                    dim(SweepName::LambdaB, vec![5e-4, 1e-3, 2e-3, 5e-3, 1e-2, 2e-2]),
                ];
            }
        }
        spec.query.sinr_threshold = spec.base.gamma();
        spec
    }
}

fn dim(name: SweepName, values: Vec<f64>) -> SweepDim {
    SweepDim { name, values }
}

fn grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    arithmetic_grid(start, stop, step).expect("preset grids are well formed")
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown preset `{s}` (expected fig1, fig2, fig3 or fig4)"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for p in Preset::ALL {
            p.spec().validate().unwrap();
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
    }

    #[test]
    fn fig1_grid_contains_every_five_db() {
        let spec = Preset::Fig1.spec();
        let g = &spec.sweep[1].values;
        for v in [-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0] {
            assert!(g.contains(&v));
        }
        assert_eq!(spec.points().unwrap().len(), 4 * 13);
    }
}
