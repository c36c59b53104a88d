//! JSON checkpoints: network parameters plus the fingerprint of the config
//! they were trained under.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use uabs_core::learn::QNetwork;
use uabs_core::SimConfig;

use crate::config_io::config_hash;
use crate::error::{SimError, SimResult};

const FORMAT: &str = "uabs-checkpoint-v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub config_hash: String,
    /// Training episodes completed when the snapshot was taken.
    pub episode: usize,
    /// Cumulative reward of the evaluation pass that selected it.
    pub eval_reward: f64,
    /// Canonical config text, kept for inspection.
    pub config: String,
    pub network: QNetwork,
}

impl Checkpoint {
    pub fn new(config: &SimConfig, episode: usize, eval_reward: f64, network: QNetwork) -> Self {
        Self {
            format: FORMAT.into(),
            config_hash: config_hash(config),
            episode,
            eval_reward,
            config: config.to_kv_string(),
            network,
        }
    }

    pub fn save(&self, path: &Path) -> SimResult<()> {
        let text = serde_json::to_string(self).map_err(|e| SimError::Checkpoint(e.to_string()))?;
        fs::write(path, text).map_err(|e| SimError::io(path, e))
    }

    /// Reads a checkpoint and refuses it unless it was produced under a
    /// config with the same fingerprint as `config`.
    pub fn load(path: &Path, config: &SimConfig) -> SimResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
        let ck: Checkpoint = serde_json::from_str(&text).map_err(|e| SimError::Checkpoint(e.to_string()))?;
        if ck.format != FORMAT {
            return Err(SimError::Checkpoint(format!("unknown format {:?}", ck.format)));
        }
        let expected = config_hash(config);
        if ck.config_hash != expected {
            return Err(SimError::HashMismatch { expected, found: ck.config_hash });
        }
        let dim = config.feature_dim();
        if ck.network.input_dim() != dim || ck.network.hidden() != config.learner.hidden_layers.as_slice() {
            return Err(SimError::Checkpoint("network shape does not match the config".into()));
        }
        Ok(ck)
    }
}
