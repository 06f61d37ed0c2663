//! JSON network descriptions and readout weight snapshots.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use tcsnn_core::network::NetworkParts;
use tcsnn_core::{FixedPointFormat, Network};

use crate::error::{Error, Result};

pub fn export_network(net: &Network) -> Result<String> {
    Ok(serde_json::to_string_pretty(net.parts())?)
}

/// Rebuilds a network, re-running every structural check.
pub fn import_network(text: &str) -> Result<Network> {
    let parts: NetworkParts = serde_json::from_str(text)?;
    Ok(Network::from_parts(parts)?)
}

pub fn save_network(path: &Path, net: &Network) -> Result<()> {
    fs::write(path, export_network(net)?).map_err(|e| Error::io(path, e))
}

pub fn load_network(path: &Path) -> Result<Network> {
    import_network(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

/// Trained readout weights in raw fixed point, for inference-only reuse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSnapshot {
    pub format: FixedPointFormat,
    pub reservoir_size: usize,
    pub num_readout: usize,
    /// Indexed `pre * num_readout + readout`.
    pub weights: Vec<i64>,
}

impl WeightSnapshot {
    pub fn of(net: &Network) -> Self {
        let cfg = net.config();
        Self {
            format: cfg.format,
            reservoir_size: cfg.reservoir_size,
            num_readout: cfg.num_readout,
            weights: net.readout_weights().to_vec(),
        }
    }

    pub fn apply(&self, net: &mut Network) -> Result<()> {
        let cfg = net.config();
        if self.format != cfg.format
            || self.reservoir_size != cfg.reservoir_size
            || self.num_readout != cfg.num_readout
            || self.weights.len() != self.reservoir_size * self.num_readout
        {
            return Err(Error::Config("weight snapshot does not fit the network".into()));
        }
        net.readout_weights_mut().copy_from_slice(&self.weights);
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
