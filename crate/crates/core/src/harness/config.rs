//! Experiment configuration, stored as TOML.
//!
//! ```toml
//! scenario = "scenario1"      # scenario1 | scenario2 | custom
//! seed = 0
//! output_dir = "runs/scenario1"
//! hidden_dim = 32
//!
//! [selftrain]
//! iterations = 7
//! variant = "consistency"     # or "plain-retrain"
//!
//! [selftrain.policy]
//! kind = "fixed"              # or "curriculum"
//! epsilon = 0.9
//! base_threshold = 0.95
//! pseudo_balance = true
//!
//! [selftrain.train]           # learning_rate, momentum, batch_size,
//!                             # epochs_per_iteration, patience
//! [selftrain.aug]             # weak_noise_sigma, strong_noise_sigma,
//!                             # strong_mask_prob
//!
//! [skew]                      # unlabeled-pool distortion (not scenario1)
//! class_ratio = 0.2
//!
//! [data.synthetic]            # or [data.csv]; optional for presets
//! ```
//!
//! Unknown keys are rejected everywhere. Omitted sections take their
//! defaults; [`ExperimentConfig::resolve`] additionally fills in the preset
//! data source and skew so the manifest echo is fully explicit.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::presets;
use crate::data::{SkewSpec, SyntheticSpec};
use crate::learner::DEFAULT_HIDDEN_DIM;
use crate::selftrain::SelfTrainConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    /// Biased labeled stand-in, balanced unlabeled pool.
    Scenario1,
    /// Balanced labeled stand-in, skewed unlabeled pool.
    Scenario2,
    /// Everything comes from the config.
    Custom,
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::Scenario1 => "scenario1",
            Scenario::Scenario2 => "scenario2",
            Scenario::Custom => "custom",
        })
    }
}

/// CSV partitions. Paths are taken relative to the working directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvSource {
    pub feature_dim: usize,
    pub labeled: PathBuf,
    /// Labels in this file, if any, are stripped before training.
    pub unlabeled: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation: Option<PathBuf>,
    pub test: PathBuf,
    /// Subsample the test file to equal class counts.
    #[serde(default)]
    pub curate_test: bool,
}

impl CsvSource {
    pub fn paths(&self) -> Vec<(&'static str, &Path)> {
        let mut v = vec![
            ("labeled", self.labeled.as_path()),
            ("unlabeled", self.unlabeled.as_path()),
        ];
        if let Some(p) = &self.validation {
            v.push(("validation", p.as_path()));
        }
        v.push(("test", self.test.as_path()));
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataSource {
    Synthetic(SyntheticSpec),
    Csv(CsvSource),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    #[serde(default)]
    pub seed: u64,
    /// Run directory. Defaults to `runs/<scenario>`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_hidden")]
    pub hidden_dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<DataSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skew: Option<SkewSpec>,
    #[serde(default)]
    pub selftrain: SelfTrainConfig,
}

fn default_hidden() -> usize {
    DEFAULT_HIDDEN_DIM
}

fn at(path: &str, e: Error) -> Error {
    match e {
        Error::Config(m) => Error::Config(format!("{path}: {m}")),
        other => Error::Config(format!("{path}: {other}")),
    }
}

impl ExperimentConfig {
    pub fn preset(scenario: Scenario) -> Self {
        Self {
            scenario,
            seed: 0,
            output_dir: None,
            hidden_dim: DEFAULT_HIDDEN_DIM,
            data: None,
            skew: None,
            selftrain: SelfTrainConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_dim == 0 {
            return Err(Error::Config("hidden_dim: must be positive".into()));
        }
        match (&self.data, self.scenario) {
            (None, Scenario::Custom) => {
                return Err(Error::Config(
                    "data: a custom scenario needs [data.synthetic] or [data.csv]".into(),
                ))
            }
            (Some(DataSource::Synthetic(s)), _) => {
                s.validate().map_err(|e| at("data.synthetic", e))?;
            }
            (Some(DataSource::Csv(c)), _) if c.feature_dim == 0 => {
                return Err(Error::Config(
                    "data.csv.feature_dim: must be positive".into(),
                ))
            }
            _ => {}
        }
        if let Some(skew) = &self.skew {
            if self.scenario == Scenario::Scenario1 {
                return Err(Error::Config(
                    "skew: scenario1 keeps the unlabeled pool balanced; use scenario2 or custom"
                        .into(),
                ));
            }
            skew.validate().map_err(|e| at("skew", e))?;
        }
        let st = &self.selftrain;
        if st.iterations == 0 {
            return Err(Error::Config(
                "selftrain.iterations: must be at least 1".into(),
            ));
        }
        st.policy
            .validate()
            .map_err(|e| at("selftrain.policy", e))?;
        st.train.validate().map_err(|e| at("selftrain.train", e))?;
        st.aug.validate().map_err(|e| at("selftrain.aug", e))
    }

    /// Copy with preset data, preset skew and output directory filled in, and
    /// the master seed propagated to the self-training config.
    pub fn resolve(&self) -> Self {
        let mut c = self.clone();
        if c.data.is_none() {
            c.data = match c.scenario {
                Scenario::Scenario1 => Some(DataSource::Synthetic(presets::scenario1())),
                Scenario::Scenario2 => Some(DataSource::Synthetic(presets::scenario2())),
                Scenario::Custom => None,
            };
        }
        if c.skew.is_none() && c.scenario == Scenario::Scenario2 {
            c.skew = Some(presets::scenario2_skew());
        }
        if c.output_dir.is_none() {
            c.output_dir = Some(PathBuf::from("runs").join(c.scenario.to_string()));
        }
        c.selftrain.seed = c.seed;
        c
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("runs").join(self.scenario.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialize config: {e}")))
    }
}

/// Parses and validates a config. Errors name the offending key path.
pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    let de = toml::Deserializer::parse(text).map_err(|e| Error::Config(e.to_string()))?;
    let mut cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let msg = inner.message().trim().to_string();
        if path == "." || path.is_empty() {
            Error::Config(msg)
        } else {
            Error::Config(format!("{path}: {msg}"))
        }
    })?;
    cfg.validate()?;
    cfg.selftrain.seed = cfg.seed;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
        _ => Error::io(path, e),
    })?;
    parse_config_str(&text).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}
