//! Shared-policy dueling double DQN.

mod network;
mod replay;
mod trainer;

pub use network::{aggregate, Dense, QNetwork, Trace, NUM_ACTIONS};
pub use replay::{Experience, ReplayBuffer};
pub use trainer::{double_target, loss_and_gradient, masked_argmax, Adam, PolicySnapshot, TrainState};

use alloc::vec::Vec;

use rand::Rng;

use crate::config::SimConfig;
use crate::env::{Action, Observation};
use crate::error::{Error, Result};
use crate::safety::ActionMask;

/// Feature vector `[x/W, y/H, t/T, fleet / (W, H)..., b / (|G| (N + 1))]`.
pub fn encode(o: &Observation, config: &SimConfig) -> Vec<f64> {
    let (w, h) = (config.area_width, config.area_height);
    let b_scale = (config.num_gues * (config.window_len + 1)).max(1) as f64;
    let mut f = Vec::with_capacity(3 + 2 * o.fleet.len() + o.beam_info.0.len());
    f.push(o.self_xy.x / w);
    f.push(o.self_xy.y / h);
    f.push(o.t as f64 / config.episode_len as f64);
    for p in &o.fleet {
        f.push(p.x / w);
        f.push(p.y / h);
    }
    f.extend(o.beam_info.0.iter().map(|&b| b as f64 / b_scale));
    f
}

/// Epsilon-greedy over legal actions: with probability `epsilon` a uniform
/// legal action, otherwise the legal argmax (ties to the earlier action).
pub fn select_action<R: Rng + ?Sized>(
    net: &QNetwork,
    features: &[f64],
    mask: &ActionMask,
    epsilon: f64,
    rng: &mut R,
) -> Result<Action> {
    let legal = mask.count();
    if legal == 0 {
        return Err(Error::EmptyMask);
    }
    if rng.random::<f64>() < epsilon {
        let k = rng.random_range(0..legal);
        return Ok(mask.legal_actions().nth(k).expect("k < legal"));
    }
    let q = net.forward(features)?;
    let i = masked_argmax(&q, mask).expect("mask non-empty");
    Ok(Action::ALL[i])
}

/// Linear decay from `eps_start` to `eps_end` over the first
/// `eps_decay_fraction` of training episodes, constant afterwards.
pub fn epsilon_for_episode(episode: usize, config: &SimConfig) -> f64 {
    let l = &config.learner;
    let horizon = l.eps_decay_fraction * config.train_episodes as f64;
    if horizon <= 0.0 || episode as f64 >= horizon {
        return l.eps_end;
    }
    l.eps_start + (l.eps_end - l.eps_start) * episode as f64 / horizon
}
