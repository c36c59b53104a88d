//! `key = value` config files and the config fingerprint used by checkpoints.

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};
use uabs_core::SimConfig;

use crate::error::{SimError, SimResult};

/// Keys that only affect run length or seeding, not what a trained network
/// means. They are left out of the fingerprint so a checkpoint can be
/// evaluated under another seed or training budget.
const UNHASHED_KEYS: [&str; 3] = ["rng_seed", "train_episodes", "eval_period"];

/// Applies `key = value` lines on top of `base`. Blank lines and `#`
/// comments are skipped; unknown keys are an error.
pub fn parse_config(text: &str, base: SimConfig) -> SimResult<SimConfig> {
    let mut config = base;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| SimError::ConfigLine {
            line: i + 1,
            reason: format!("expected `key = value`, got {raw:?}"),
        })?;
        config
            .set(key.trim(), value.trim())
            .map_err(|e| SimError::ConfigLine { line: i + 1, reason: e.to_string() })?;
    }
    Ok(config)
}

pub fn load_config(path: &Path, base: SimConfig) -> SimResult<SimConfig> {
    let text = fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
    parse_config(&text, base)
}

/// Applies `key=value` overrides such as those given with `--set`.
pub fn apply_overrides<S: AsRef<str>>(config: &mut SimConfig, overrides: &[S]) -> SimResult<()> {
    for o in overrides {
        let o = o.as_ref();
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| SimError::Override(format!("expected key=value, got {o:?}")))?;
        config.set(k.trim(), v.trim()).map_err(|e| SimError::Override(e.to_string()))?;
    }
    Ok(())
}

/// Hex SHA-256 over the canonical text of every field that shapes the
/// environment or the network.
pub fn config_hash(config: &SimConfig) -> String {
    let mut h = Sha256::new();
    for (k, v) in config.entries() {
        if UNHASHED_KEYS.contains(&k) {
            continue;
        }
        h.update(k.as_bytes());
        h.update(b"=");
        h.update(v.as_bytes());
        h.update(b"\n");
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use uabs_core::config::SafetyMode;

    #[test]
    fn parses_comments_and_blank_lines() {
        let text = "# run\n\nnum_agents = 4  # more\nsafety_mode = flat_mask\nhidden_layers = 64,32\n";
        let c = parse_config(text, SimConfig::default()).unwrap();
        assert_eq!(c.num_agents, 4);
        assert_eq!(c.safety_mode, SafetyMode::FlatMask);
        assert_eq!(c.learner.hidden_layers, [64, 32]);
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = parse_config("num_agents = 2\nwarp_drive = 9\n", SimConfig::default()).unwrap_err();
        assert!(matches!(err, SimError::ConfigLine { line: 2, .. }), "{err}");
        assert!(parse_config("just words\n", SimConfig::default()).is_err());
    }

    #[test]
    fn canonical_text_round_trips() {
        let mut c = SimConfig::desk_scale();
        c.learner.grad_clip = Some(10.0);
        c.grx_db = Some(38.0);
        let back = parse_config(&c.to_kv_string(), SimConfig::default()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn hash_ignores_seed_and_budget_only() {
        let a = SimConfig::default();
        let mut b = a.clone();
        b.rng_seed = 99;
        b.train_episodes = 3;
        b.eval_period = 1;
        assert_eq!(config_hash(&a), config_hash(&b));
        b.num_agents = 2;
        assert_ne!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 64);
    }

    #[test]
    fn overrides() {
        let mut c = SimConfig::default();
        apply_overrides(&mut c, &["gamma=0.5", " num_gues = 7 "]).unwrap();
        assert_eq!((c.learner.gamma, c.num_gues), (0.5, 7));
        assert!(apply_overrides(&mut c, &["gamma"]).is_err());
        assert!(apply_overrides(&mut c, &["nope=1"]).is_err());
    }
}
