//! Run configuration: TOML with one table per subsystem. Every key has a
//! default, so an empty file yields the full two-tier preset.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelConfig;
use crate::dqn::DqnConfig;
use crate::error::{Error, Result};
use crate::rl::LearnParams;
use crate::scheduler::{SchedulerKind, SchedulingConfig};
use crate::topology::ScenarioConfig;
use crate::traffic::TrafficConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchedulerChoice {
    Rr,
    Qtab,
    Dmdq,
    All,
}

impl SchedulerChoice {
    pub fn kinds(self) -> Vec<SchedulerKind> {
        match self {
            SchedulerChoice::Rr => vec![SchedulerKind::Rr],
            SchedulerChoice::Qtab => vec![SchedulerKind::Qtab],
            SchedulerChoice::Dmdq => vec![SchedulerKind::Dmdq],
            SchedulerChoice::All => SchedulerKind::ALL.to_vec(),
        }
    }
}

impl std::str::FromStr for SchedulerChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all" => Ok(SchedulerChoice::All),
            other => other.parse::<SchedulerKind>().map(|k| match k {
                SchedulerKind::Rr => SchedulerChoice::Rr,
                SchedulerKind::Qtab => SchedulerChoice::Qtab,
                SchedulerKind::Dmdq => SchedulerChoice::Dmdq,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scheduler: SchedulerChoice,
    /// Subframes per run.
    pub horizon: u64,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    pub scenario: ScenarioConfig,
    pub traffic: TrafficConfig,
    pub channel: ChannelConfig,
    pub learning: LearnParams,
    pub scheduling: SchedulingConfig,
    pub dqn: DqnConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scheduler: SchedulerChoice::All,
            horizon: 10_000,
            seeds: vec![1],
            output_dir: PathBuf::from("results"),
            scenario: ScenarioConfig::default(),
            traffic: TrafficConfig::default(),
            channel: ChannelConfig::default(),
            learning: LearnParams::default(),
            scheduling: SchedulingConfig::default(),
            dqn: DqnConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::range("horizon", "must be at least 1 subframe"));
        }
        if self.seeds.is_empty() {
            return Err(Error::range("seeds", "at least one seed is required"));
        }
        self.scenario.validate()?;
        self.traffic.validate()?;
        self.channel.validate()?;
        self.learning.validate()?;
        self.scheduling.validate()?;
        self.dqn.validate()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Parses and validates a TOML run config.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::ConfigSyntax(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}
