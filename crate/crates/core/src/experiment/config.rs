use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    #[default]
    Evolve,
    Convergence,
    Trajectory,
    GaugeCheck,
    CurvatureCheck,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Evolve => "evolve",
            Experiment::Convergence => "convergence",
            Experiment::Trajectory => "trajectory",
            Experiment::GaugeCheck => "gauge-check",
            Experiment::CurvatureCheck => "curvature-check",
        }
    }
}

/// Background used by the curvature check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CurvatureField {
    /// Uniform SU(2) electric field of strength `e_ym`.
    #[default]
    Electric,
    /// Smooth non-commuting U(N) potentials.
    Smooth,
    /// Smooth potentials along a single generator.
    Commuting,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Internal dimension `N`.
    #[serde(alias = "N")]
    pub dim: usize,
    pub mass: f64,
    pub e_ym: f64,
    pub g: f64,
    /// Coin angle; defaults to `−ε m`.
    pub theta: Option<f64>,
    /// Lattice step for single-ε experiments.
    pub epsilon: f64,
    /// Sweep for the convergence experiment, strictly decreasing.
    pub epsilons: Vec<f64>,
    /// Halving sequence for the curvature check.
    pub curvature_epsilons: Vec<f64>,
    pub curvature_field: CurvatureField,
    /// Momentum-space width of the initial packet.
    pub sigma: f64,
    pub k0: f64,
    pub x_max: f64,
    pub t_max: f64,
    pub seed: u64,
    /// Random trials and steps per trial for the gauge check.
    pub trials: usize,
    pub steps: usize,
    /// Half-width (in sites) of the lattice used by the gauge check.
    pub check_p_max: usize,
    /// Color component compared in δ; all colors stacked when absent.
    pub color_index: Option<usize>,
    /// Write a state checkpoint every this many steps in `evolve`.
    pub checkpoint_every: Option<usize>,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::Evolve,
            dim: 2,
            mass: 0.1,
            e_ym: 0.08,
            g: 1.0,
            theta: None,
            epsilon: 0.1,
            epsilons: vec![0.4, 0.2, 0.1, 0.05],
            curvature_epsilons: vec![0.2, 0.1, 0.05, 0.025],
            curvature_field: CurvatureField::Electric,
            sigma: 0.5,
            k0: 0.0,
            x_max: 100.0,
            t_max: 50.0,
            seed: 0,
            trials: 100,
            steps: 50,
            check_p_max: 50,
            color_index: None,
            checkpoint_every: None,
            output_dir: PathBuf::from("out"),
        }
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be finite, got {v}")))
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive, got {v}")))
    }
}

fn decreasing(name: &str, v: &[f64], min_len: usize) -> Result<()> {
    if v.len() < min_len {
        return Err(Error::Config(format!("{name} needs at least {min_len} values")));
    }
    for e in v {
        positive(name, *e)?;
    }
    if v.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config(format!("{name} must be strictly decreasing")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }

    /// Coin angle for lattice step `epsilon`.
    pub fn theta_for(&self, epsilon: f64) -> f64 {
        self.theta.unwrap_or(-epsilon * self.mass)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=8).contains(&self.dim) {
            return Err(Error::Config(format!("N must be in 1..=8, got {}", self.dim)));
        }
        if !(self.mass.is_finite() && self.mass >= 0.0) {
            return Err(Error::Config(format!("mass must be finite and >= 0, got {}", self.mass)));
        }
        finite("e_ym", self.e_ym)?;
        finite("g", self.g)?;
        finite("k0", self.k0)?;
        if let Some(t) = self.theta {
            finite("theta", t)?;
        }
        positive("epsilon", self.epsilon)?;
        positive("sigma", self.sigma)?;
        positive("x_max", self.x_max)?;
        if !(self.t_max.is_finite() && self.t_max >= 0.0) {
            return Err(Error::Config(format!("t_max must be >= 0, got {}", self.t_max)));
        }
        if let Some(c) = self.color_index {
            if c >= self.dim {
                return Err(Error::Config(format!("color_index {c} out of range for N = {}", self.dim)));
            }
        }
        if self.checkpoint_every == Some(0) {
            return Err(Error::Config("checkpoint_every must be >= 1".into()));
        }
        match self.experiment {
            Experiment::Convergence => {
                decreasing("epsilons", &self.epsilons, 3)?;
                self.require_su2()?;
            }
            Experiment::Trajectory => self.require_su2()?,
            Experiment::CurvatureCheck => {
                decreasing("curvature_epsilons", &self.curvature_epsilons, 2)?;
                if self.curvature_field == CurvatureField::Electric {
                    self.require_su2()?;
                }
            }
            Experiment::GaugeCheck => {
                if self.trials == 0 || self.steps == 0 || self.check_p_max < 2 {
                    return Err(Error::Config("gauge check needs trials, steps >= 1 and check_p_max >= 2".into()));
                }
            }
            Experiment::Evolve => {}
        }
        Ok(())
    }

    fn require_su2(&self) -> Result<()> {
        if self.dim != 2 {
            return Err(Error::Config(format!(
                "the {} experiment uses the SU(2) electric field and needs N = 2, got {}",
                self.experiment.name(),
                self.dim
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        for e in [
            Experiment::Evolve,
            Experiment::Convergence,
            Experiment::Trajectory,
            Experiment::GaugeCheck,
            Experiment::CurvatureCheck,
        ] {
            let cfg = ExperimentConfig {
                experiment: e,
                ..Default::default()
            };
            cfg.validate().unwrap();
        }
    }

    #[test]
    fn json_round_trip_and_aliases() {
        let cfg = ExperimentConfig::from_json(r#"{"experiment": "gauge-check", "N": 3, "seed": 7}"#).unwrap();
        assert_eq!(cfg.experiment, Experiment::GaugeCheck);
        assert_eq!(cfg.dim, 3);
        let back = ExperimentConfig::from_json(&cfg.to_json().to_string()).unwrap();
        assert_eq!(back, cfg);
        assert!(matches!(ExperimentConfig::from_json(r#"{"bogus": 1}"#), Err(Error::Config(_))));
    }

    #[test]
    fn invalid_configs() {
        let base = ExperimentConfig::default();
        let bad = [
            ExperimentConfig { mass: f64::NAN, ..base.clone() },
            ExperimentConfig { sigma: 0.0, ..base.clone() },
            ExperimentConfig { dim: 0, ..base.clone() },
            ExperimentConfig {
                experiment: Experiment::Convergence,
                epsilons: vec![],
                ..base.clone()
            },
            ExperimentConfig {
                experiment: Experiment::Convergence,
                epsilons: vec![0.1, 0.2, 0.4],
                ..base.clone()
            },
            ExperimentConfig {
                experiment: Experiment::Trajectory,
                dim: 3,
                ..base.clone()
            },
            ExperimentConfig { color_index: Some(2), ..base.clone() },
        ];
        for cfg in bad {
            let err = cfg.validate().unwrap_err();
            assert_eq!(err.exit_code(), 1, "{err}");
        }
        assert_eq!(base.theta_for(0.1), -0.1 * 0.1);
    }
}
