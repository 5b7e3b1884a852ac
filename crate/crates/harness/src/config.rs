//! Experiment configuration files. Keys mirror the struct fields.
//!
//! ```toml
//! n = 10
//! kappa = 1e4
//! alpha = 1.0
//! strategy = "subset_k_natural"
//! seeds = [0, 1, 2]
//! out_dir = "out"
//!
//! [data]
//! kind = "libsvm"
//! path = "w8a.txt.gz"
//! dim = 300
//!
//! [gamma]
//! kind = "default_grid"
//!
//! [stop]
//! max_iters = 20000
//! target = 1e-6
//! ```

use std::path::{Path, PathBuf};

use bicolor_core::accounting::UplinkPolicy;
use bicolor_core::algorithm::{Regime, StopMetric};
use bicolor_core::compressors::CompressorKind;
use bicolor_core::problems::RegularizationLayout;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    /// LibSVM text file, optionally gzip-compressed (`.gz`).
    Libsvm {
        path: PathBuf,
        #[serde(default)]
        dim: Option<usize>,
    },
    /// Random features with noisy linear labels.
    SyntheticLogistic {
        rows: usize,
        dim: usize,
        #[serde(default = "default_label_noise")]
        label_noise: f64,
        #[serde(default)]
        seed: u64,
    },
    /// Quadratics with spectrum in `[1/κ, 1]`; uses the top-level `kappa`.
    SyntheticQuadratic {
        dim: usize,
        #[serde(default)]
        seed: u64,
    },
}

fn default_label_noise() -> f64 {
    0.1
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Shared subset of `k` coordinates, independent natural compressors.
    SubsetKNatural,
    /// `k = d`, rand-K composed with natural compression.
    RandKNatural,
    /// Compressors and `k` given in `[custom]`.
    Custom,
}

impl std::str::FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "subset_k_natural" => Ok(Strategy::SubsetKNatural),
            "rand_k_natural" => Ok(Strategy::RandKNatural),
            "custom" => Ok(Strategy::Custom),
            other => Err(format!("unknown strategy {other:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CustomCompression {
    pub uplink: CompressorKind,
    pub downlink: CompressorKind,
    pub k: usize,
    #[serde(default)]
    pub shared_randomness: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleSpec {
    /// Constant `p` tuned to the strategy and `κ` when `μ > 0`,
    /// otherwise the decreasing schedule with `b = ⌈1/η⌉`, `a = b − 1`.
    #[default]
    Theory,
    Constant {
        p: f64,
    },
    Decreasing {
        a: f64,
        b: f64,
    },
    /// `b = ⌈1/η⌉`, `a = b − 1`.
    DecreasingTheory,
    /// Constant `p` with the same expected number of rounds as the
    /// theoretical decreasing schedule over `stop.max_iters` iterations.
    MatchedConstant,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GammaSpec {
    /// `1/L`.
    #[default]
    Theory,
    Fixed {
        value: f64,
    },
    /// Multiples of `1/L`, tuned by a short sweep.
    Grid {
        factors: Vec<f64>,
    },
    /// `{2^j / L : j = −2..4}`, tuned by a short sweep.
    DefaultGrid,
}

impl GammaSpec {
    pub fn default_factors() -> Vec<f64> {
        (-2..=4).map(|j| 2f64.powi(j)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StopSpec {
    pub max_iters: u64,
    /// Relative level of `metric` at which to stop.
    #[serde(default)]
    pub target: Option<f64>,
    #[serde(default)]
    pub metric: StopMetric,
    #[serde(default)]
    pub bit_budget: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub n: usize,
    /// Target condition number; sets `μ` unless `mu` is given.
    #[serde(default)]
    pub kappa: Option<f64>,
    #[serde(default)]
    pub mu: Option<f64>,
    #[serde(default = "one")]
    pub alpha: f64,
    pub strategy: Strategy,
    #[serde(default)]
    pub custom: Option<CustomCompression>,
    /// Overrides the subset size (subset strategy) or `K` (rand-K strategy).
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub schedule: ScheduleSpec,
    #[serde(default)]
    pub gamma: GammaSpec,
    /// Iterations per sweep run; a tenth of `stop.max_iters` by default.
    #[serde(default)]
    pub sweep_iters: Option<u64>,
    /// Dual stepsize scale for the general convex regime.
    #[serde(default)]
    pub regime: Option<Regime>,
    #[serde(default)]
    pub omega_av_override: Option<f64>,
    #[serde(default)]
    pub layout: RegularizationLayout,
    pub seeds: Vec<u64>,
    pub stop: StopSpec,
    #[serde(default = "one_u64")]
    pub record_every: u64,
    #[serde(default = "yes")]
    pub count_index_overhead: bool,
    #[serde(default)]
    pub uplink_policy: UplinkPolicy,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    /// Seed of the data shuffle before partitioning.
    #[serde(default)]
    pub partition_seed: u64,
}

fn one() -> f64 {
    1.0
}

fn one_u64() -> u64 {
    1
}

fn yes() -> bool {
    true
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = Self::from_toml(&std::fs::read_to_string(path)?)?;
        // relative data paths are relative to the config file
        if let DataSource::Libsvm { path: p, .. } = &mut cfg.data {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.seeds.is_empty() {
            return bad("seeds must be nonempty".into());
        }
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be nonnegative, got {}", self.alpha));
        }
        if let GammaSpec::Grid { factors } = &self.gamma {
            if factors.is_empty() || factors.iter().any(|f| !(*f > 0.0 && f.is_finite())) {
                return bad("gamma grid values must be positive and nonempty".into());
            }
        }
        if let GammaSpec::Fixed { value } = self.gamma {
            if !(value > 0.0 && value.is_finite()) {
                return bad(format!("gamma must be positive, got {value}"));
            }
        }
        if self.strategy == Strategy::Custom && self.custom.is_none() {
            return bad("strategy = \"custom\" needs a [custom] table".into());
        }
        if let (Some(_), Some(_)) = (self.kappa, self.mu) {
            return bad("give at most one of kappa and mu".into());
        }
        if matches!(self.data, DataSource::SyntheticQuadratic { .. }) && self.kappa.is_none() {
            return bad("synthetic quadratics need kappa".into());
        }
        if self.record_every == 0 && self.stop.max_iters == 0 {
            return bad("nothing to record".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
n = 4
kappa = 100.0
strategy = "rand_k_natural"
seeds = [1, 2]

[data]
kind = "synthetic_quadratic"
dim = 6

[stop]
max_iters = 500
target = 1e-6
"#;

    #[test]
    fn parses_with_defaults() {
        let cfg = ExperimentConfig::from_toml(SAMPLE).unwrap();
        assert_eq!(cfg.alpha, 1.0);
        assert_eq!(cfg.gamma, GammaSpec::Theory);
        assert_eq!(cfg.schedule, ScheduleSpec::Theory);
        assert_eq!(cfg.stop.metric, StopMetric::RelDist);
        assert!(cfg.count_index_overhead);
    }

    #[test]
    fn reserialization_is_stable() {
        let cfg = ExperimentConfig::from_toml(SAMPLE).unwrap();
        let once = cfg.to_toml().unwrap();
        let twice = ExperimentConfig::from_toml(&once).unwrap().to_toml().unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn rejects_bad_configs() {
        let no_seeds = SAMPLE.replace("seeds = [1, 2]", "seeds = []");
        assert!(ExperimentConfig::from_toml(&no_seeds).is_err());
        let grid = format!("{SAMPLE}\n[gamma]\nkind = \"grid\"\nfactors = [1.0, -2.0]\n");
        assert!(ExperimentConfig::from_toml(&grid).is_err());
        let custom = SAMPLE.replace("rand_k_natural", "custom");
        assert!(ExperimentConfig::from_toml(&custom).is_err());
    }
}
