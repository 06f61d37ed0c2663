//! Versioned TOML experiment configuration.
//!
//! ```toml
//! schema_version = 1
//! seed = 7                  # seeds the network wiring
//! model = "iow-lif"
//! gammas = [1, 2, 4, 8, 16]
//! # beta = 1.5              # burst constant, bursting models only
//!
//! [dataset]
//! kind = "synthetic"        # or kind = "event_file", path = "data.events"
//! num_classes = 5
//!
//! [network]                 # overrides of the model's defaults
//! lambda = 2.0
//!
//! [learning]
//! epochs = 50
//!
//! [[resources]]             # optional FPGA counts, enable ATEL
//! gamma = 1
//! lut_count = 57326
//! ff_count = 18200
//! ```
//!
//! Missing tables fall back to the library defaults. `[energy]` defaults to
//! [`EnergyModel::for_neurons`] of the built network.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tcsnn_core::compress::MAX_GAMMA;
use tcsnn_core::{
    synthetic_task, BurstParams, EnergyModel, LearningParams, LsmConfig, NeuronModel, SpikeDataset,
    SyntheticTaskConfig,
};

use crate::error::{Error, Result};
use crate::events::load_events;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSource {
    Synthetic(SyntheticTaskConfig),
    /// Relative paths resolve against the config file's directory.
    EventFile {
        path: PathBuf,
    },
}

impl Default for DatasetSource {
    fn default() -> Self {
        DatasetSource::Synthetic(SyntheticTaskConfig::default())
    }
}

/// FPGA resource counts of one design point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResourceRow {
    pub gamma: u32,
    pub lut_count: u64,
    pub ff_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_model")]
    pub model: NeuronModel,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default = "default_gammas")]
    pub gammas: Vec<u32>,
    /// Build one programmable network and reprogram it per ratio.
    #[serde(default)]
    pub programmable: bool,
    #[serde(default = "default_max_gamma")]
    pub max_gamma: u32,
    #[serde(default)]
    pub dataset: DatasetSource,
    #[serde(default)]
    pub network: Option<toml::Table>,
    #[serde(default)]
    pub learning: LearningParams,
    #[serde(default)]
    pub energy: Option<EnergyModel>,
    #[serde(default)]
    pub resources: Vec<ResourceRow>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_model() -> NeuronModel {
    NeuronModel::IowLif
}

fn default_gammas() -> Vec<u32> {
    vec![1, 2, 4, 8, 16]
}

fn default_max_gamma() -> u32 {
    MAX_GAMMA
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed: 0,
            model: default_model(),
            beta: None,
            gammas: default_gammas(),
            programmable: false,
            max_gamma: default_max_gamma(),
            dataset: DatasetSource::default(),
            network: None,
            learning: LearningParams::default(),
            energy: None,
            resources: Vec::new(),
            output_dir: None,
        }
    }
}

/// A validated config with its dataset loaded and network config resolved.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub dataset: SpikeDataset,
    pub network: LsmConfig,
    pub energy: EnergyModel,
    /// Ratios to run, ascending, always starting with the baseline.
    pub gammas: Vec<u32>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config file; event-file paths become relative to it.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if let DatasetSource::EventFile { path: p } = &mut cfg.dataset {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    fn check(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.gammas.is_empty() {
            return Err(Error::Config("gammas must not be empty".into()));
        }
        if self.max_gamma == 0 {
            return Err(Error::Config("max_gamma must be at least 1".into()));
        }
        for &g in &self.gammas {
            if g == 0 || g > self.max_gamma {
                return Err(Error::Config(format!("gamma {g} outside 1..={}", self.max_gamma)));
            }
            if g > 1 && !self.model.weighted_input() {
                return Err(Error::Config(format!(
                    "model {} cannot run compressed (gamma {g})",
                    self.model
                )));
            }
        }
        if self.model.bursting() != self.beta.is_some() {
            return Err(Error::Config(if self.model.bursting() {
                format!("model {} needs `beta`", self.model)
            } else {
                format!("`beta` only applies to bursting models, not {}", self.model)
            }));
        }
        self.learning.validate()?;
        Ok(())
    }

    fn dataset(&self) -> Result<SpikeDataset> {
        match &self.dataset {
            DatasetSource::Synthetic(cfg) => Ok(synthetic_task(cfg)?),
            DatasetSource::EventFile { path } => load_events(path).map_err(|e| match e {
                Error::Io { path, source } => Error::Config(format!("{}: {source}", path.display())),
                Error::Parse { line, msg } => Error::Config(format!("{}:{line}: {msg}", path.display())),
                other => other,
            }),
        }
    }

    /// Network config: the model's defaults, then `[network]` overrides,
    /// then sizes taken from the dataset.
    fn network(&self, dataset: &SpikeDataset) -> Result<LsmConfig> {
        let burst = self.beta.map(|beta| BurstParams { beta });
        let base = LsmConfig::for_model(self.model, burst.clone());
        let mut cfg = match &self.network {
            None => base,
            Some(over) => {
                let mut table = toml::Table::try_from(&base).map_err(|e| Error::Config(e.to_string()))?;
                merge(&mut table, over);
                table
                    .try_into()
                    .map_err(|e| Error::Config(format!("[network]: {e}")))?
            }
        };
        cfg.model = self.model;
        cfg.burst = burst;
        cfg.seed = self.seed;
        cfg.num_inputs = dataset.num_channels();
        cfg.num_readout = dataset.num_classes();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn prepare(&self) -> Result<Experiment> {
        self.check()?;
        let dataset = self.dataset()?;
        let network = self.network(&dataset)?;
        let energy = self
            .energy
            .unwrap_or_else(|| EnergyModel::for_neurons(network.reservoir_size + network.num_readout));
        energy.validate()?;
        let mut gammas = self.gammas.clone();
        gammas.push(1);
        gammas.sort_unstable();
        gammas.dedup();
        Ok(Experiment {
            config: self.clone(),
            dataset,
            network,
            energy,
            gammas,
        })
    }
}

fn merge(base: &mut toml::Table, over: &toml::Table) {
    for (k, v) in over {
        match (base.get_mut(k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            _ => {
                base.insert(k.clone(), v.clone());
            }
        }
    }
}
