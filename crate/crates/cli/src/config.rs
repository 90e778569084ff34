//! Simulation configuration: bundled presets, JSON files and flag overrides.
//!
//! Layers apply in the order preset, file, flags; later layers win. A
//! `manifest.json` written by `simulate` is accepted as a config file, which
//! is how a run is reproduced.

use std::fs;
use std::path::Path;

use hellinger_ucb::index::{DEFAULT_C_HELLINGER, DEFAULT_C_KL_LOGLOG};
use hellinger_ucb::sim::{BERNOULLI_REFERENCE_MEANS, POISSON_REFERENCE_MEANS};
use hellinger_ucb::{BanditInstance, IndexRule, PolicyConfig, RewardFamily};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const DEFAULT_HORIZON: u64 = 10_000;
pub const DEFAULT_EPOCHS: u64 = 200;
pub const DEFAULT_SEED: u64 = 2024;

pub const PRESETS: [&str; 2] = ["bernoulli-paper", "poisson-paper"];

/// A fully resolved `simulate` configuration; recorded verbatim in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub family: RewardFamily,
    pub means: Vec<f64>,
    pub policies: Vec<IndexRule>,
    pub horizon: u64,
    pub epochs: u64,
    pub master_seed: u64,
    pub c_hellinger: f64,
    pub c_kl_loglog: f64,
    /// Whether to write `bounds.csv`.
    pub bounds: bool,
}

impl SimulateConfig {
    pub fn preset(name: &str) -> Result<Self> {
        let (family, means): (_, &[f64]) = match name {
            "bernoulli-paper" => (RewardFamily::Bernoulli, &BERNOULLI_REFERENCE_MEANS),
            "poisson-paper" => (RewardFamily::Poisson, &POISSON_REFERENCE_MEANS),
            _ => {
                return Err(CliError::input(format!(
                    "unknown preset `{name}` (available: {})",
                    PRESETS.join(", ")
                )))
            }
        };
        Ok(Self {
            family,
            means: means.to_vec(),
            policies: vec![IndexRule::HellingerUcb, IndexRule::KlUcb, IndexRule::Ucb1],
            horizon: DEFAULT_HORIZON,
            epochs: DEFAULT_EPOCHS,
            master_seed: DEFAULT_SEED,
            c_hellinger: DEFAULT_C_HELLINGER,
            c_kl_loglog: DEFAULT_C_KL_LOGLOG,
            bounds: true,
        })
    }

    pub fn instance(&self) -> Result<BanditInstance> {
        Ok(BanditInstance::new(self.family, &self.means)?)
    }

    pub fn policy_configs(&self) -> Vec<PolicyConfig> {
        self.policies
            .iter()
            .map(|&rule| {
                PolicyConfig::new(rule)
                    .with_c_hellinger(self.c_hellinger)
                    .with_c_kl_loglog(self.c_kl_loglog)
            })
            .collect()
    }

    /// Checks everything a run needs before any output is created.
    pub fn validate(&self) -> Result<()> {
        let instance = self.instance()?;
        if self.policies.is_empty() {
            return Err(CliError::input("at least one policy is required"));
        }
        for (i, rule) in self.policies.iter().enumerate() {
            if self.policies[..i].contains(rule) {
                return Err(CliError::input(format!(
                    "policy `{}` listed twice",
                    rule.name()
                )));
            }
        }
        for config in self.policy_configs() {
            config.validate()?;
        }
        if self.epochs == 0 {
            return Err(CliError::input("epochs must be at least 1"));
        }
        if self.horizon < instance.arms() as u64 {
            return Err(hellinger_ucb::Error::HorizonTooShort {
                horizon: self.horizon,
                arms: instance.arms(),
            }
            .into());
        }
        Ok(())
    }
}

/// A partial configuration: the contents of a config file, or the flags.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigLayer {
    pub preset: Option<String>,
    pub family: Option<RewardFamily>,
    pub means: Option<Vec<f64>>,
    pub policies: Option<Vec<IndexRule>>,
    pub horizon: Option<u64>,
    pub epochs: Option<u64>,
    pub master_seed: Option<u64>,
    pub c_hellinger: Option<f64>,
    pub c_kl_loglog: Option<f64>,
    pub bounds: Option<bool>,
}

impl ConfigLayer {
    /// Reads a config file, or the `config` object of a run manifest.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let json_err = |source| CliError::Json {
            path: path.to_path_buf(),
            source,
        };
        let mut value: serde_json::Value = serde_json::from_str(&text).map_err(json_err)?;
        if value.get("command").is_some() {
            value = value
                .get_mut("config")
                .map(serde_json::Value::take)
                .ok_or_else(|| {
                    CliError::input(format!("{}: manifest has no `config`", path.display()))
                })?;
        }
        serde_json::from_value(value).map_err(json_err)
    }

    /// Fields set in `other` replace those in `self`.
    pub fn overlay(self, other: ConfigLayer) -> Self {
        Self {
            preset: other.preset.or(self.preset),
            family: other.family.or(self.family),
            means: other.means.or(self.means),
            policies: other.policies.or(self.policies),
            horizon: other.horizon.or(self.horizon),
            epochs: other.epochs.or(self.epochs),
            master_seed: other.master_seed.or(self.master_seed),
            c_hellinger: other.c_hellinger.or(self.c_hellinger),
            c_kl_loglog: other.c_kl_loglog.or(self.c_kl_loglog),
            bounds: other.bounds.or(self.bounds),
        }
    }

    /// Resolves the layer against its preset (if any) and the defaults.
    pub fn resolve(self) -> Result<SimulateConfig> {
        let base = match &self.preset {
            Some(name) => Some(SimulateConfig::preset(name)?),
            None => None,
        };
        let family = self
            .family
            .or(base.as_ref().map(|b| b.family))
            .ok_or_else(|| CliError::input("no reward family given (use --family or --preset)"))?;
        let means = self
            .means
            .or(base.as_ref().map(|b| b.means.clone()))
            .ok_or_else(|| CliError::input("no arm means given (use --means or --preset)"))?;
        let config = SimulateConfig {
            family,
            means,
            policies: self
                .policies
                .or(base.as_ref().map(|b| b.policies.clone()))
                .unwrap_or_else(|| {
                    vec![IndexRule::HellingerUcb, IndexRule::KlUcb, IndexRule::Ucb1]
                }),
            horizon: self.horizon.unwrap_or(DEFAULT_HORIZON),
            epochs: self.epochs.unwrap_or(DEFAULT_EPOCHS),
            master_seed: self.master_seed.unwrap_or(DEFAULT_SEED),
            c_hellinger: self.c_hellinger.unwrap_or(DEFAULT_C_HELLINGER),
            c_kl_loglog: self.c_kl_loglog.unwrap_or(DEFAULT_C_KL_LOGLOG),
            bounds: self.bounds.unwrap_or(true),
        };
        config.validate()?;
        Ok(config)
    }
}

/// Parses `0.1,0.2,0.3`.
pub fn parse_means(text: &str) -> std::result::Result<Vec<f64>, String> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| format!("bad mean `{}`: {e}", s.trim()))
        })
        .collect()
}

/// Parses `hellinger_ucb,kl_ucb,ucb1`.
pub fn parse_policies(text: &str) -> std::result::Result<Vec<IndexRule>, String> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<IndexRule>()
                .map_err(|e| format!("`{}`: {e}", s.trim()))
        })
        .collect()
}
