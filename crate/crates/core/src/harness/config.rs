use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Algorithm {
    /// Composite learner on bounded gradients.
    #[serde(rename = "sub-exp-1d")]
    SubExp1d,
    /// Clipped composite learner on heavy-tailed scalar gradients.
    #[serde(rename = "heavy-tail-1d")]
    HeavyTail1d,
    /// Magnitude and direction reduction in `dimension` coordinates.
    #[serde(rename = "dimension-free")]
    DimensionFree,
}

fn default_moment_power() -> f64 {
    2.0
}

fn default_dimension() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerConfig {
    pub algorithm: Algorithm,
    pub sigma: f64,
    /// Uniform gradient bound; required by `sub-exp-1d` only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    pub lipschitz: f64,
    #[serde(default = "default_moment_power")]
    pub moment_power: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub horizon: u64,
    #[serde(default = "default_dimension")]
    pub dimension: usize,
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        let p = self.moment_power;
        if !(p > 1.0 && p <= 2.0) {
            return Err(Error::config(format!(
                "moment_power must be in (1, 2], got {p}"
            )));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::config(format!(
                "delta must be in (0, 1], got {}",
                self.delta
            )));
        }
        if self.horizon < 2 {
            return Err(Error::config(format!(
                "horizon must be at least 2, got {}",
                self.horizon
            )));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::config("epsilon must be positive"));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::config("sigma must be finite and nonnegative"));
        }
        if !(self.lipschitz.is_finite() && self.lipschitz >= 0.0) {
            return Err(Error::config("lipschitz must be finite and nonnegative"));
        }
        if self.dimension == 0 {
            return Err(Error::config("dimension must be positive"));
        }
        match self.algorithm {
            Algorithm::SubExp1d | Algorithm::HeavyTail1d if self.dimension != 1 => Err(
                Error::config("one-dimensional algorithms require dimension = 1"),
            ),
            Algorithm::SubExp1d => match self.b {
                Some(b) if b.is_finite() && b > 0.0 => {
                    if self.sigma > 0.0 {
                        Ok(())
                    } else {
                        Err(Error::config("sub-exp-1d requires sigma > 0"))
                    }
                }
                _ => Err(Error::config("sub-exp-1d requires a positive b")),
            },
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    /// `symmetric-pareto`, `student-t`, `bounded-uniform` or `none`.
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_index: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dof: Option<f64>,
    /// Target `p`-th moment scale; defaults to the learner's `sigma`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_sigma: Option<f64>,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            kind: "none".into(),
            tail_index: None,
            dof: None,
            target_sigma: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossConfig {
    /// `absolute`, `hinge` or `linear`.
    pub kind: String,
    /// Regression target of the absolute loss.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    /// Hinge labels are `+1` with probability `(1 + label_bias) / 2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_bias: Option<f64>,
    /// Linear loss coefficient as a fraction of the Lipschitz bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
    /// Loss direction; normalized. Defaults to the all-ones direction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    /// Comparator scales along the loss direction; defaults to `{0, +-0.1, +-1, +-10}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparators: Option<Vec<f64>>,
}

fn default_seeds() -> usize {
    1
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            master_seed: 0,
            seeds: default_seeds(),
            comparators: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub learner: LearnerConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    pub loss: LossConfig,
    #[serde(default)]
    pub run: RunConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.learner.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Hex SHA-256 prefix of the canonical serialization.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Overrides one numeric field, as used by parameter sweeps.
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        let l = &mut self.learner;
        match key {
            "T" | "horizon" => {
                if !(value.is_finite()
                    && value >= 0.0
                    && value.fract() == 0.0
                    && value <= u64::MAX as f64)
                {
                    return Err(Error::config(format!(
                        "horizon must be an integer, got {value}"
                    )));
                }
                l.horizon = value as u64;
            }
            "sigma" => l.sigma = value,
            "b" => l.b = Some(value),
            "G" | "lipschitz" => l.lipschitz = value,
            "p" | "moment_power" => l.moment_power = value,
            "delta" => l.delta = value,
            "epsilon" => l.epsilon = value,
            _ => return Err(Error::config(format!("cannot vary unknown key {key:?}"))),
        }
        l.validate()
    }
}
