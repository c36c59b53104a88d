//! Run configuration.
//!
//! [`SimConfig`] is the single source of truth for a run. Every field is
//! addressable by a flat `key = value` name through [`SimConfig::set`] and
//! [`SimConfig::entries`]; the std crate builds its config-file format on top
//! of those two methods.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;

/// Anti-collision mechanism in force for a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SafetyMode {
    /// Reward penalties only; masks remove out-of-area moves and nothing else.
    Penalty,
    /// Symmetric masking against every peer's current position.
    FlatMask,
    /// Rank-ordered masking against committed moves of higher-ranked peers.
    RankMask,
}

impl SafetyMode {
    pub const ALL: [SafetyMode; 3] = [SafetyMode::Penalty, SafetyMode::FlatMask, SafetyMode::RankMask];

    pub fn as_str(self) -> &'static str {
        match self {
            SafetyMode::Penalty => "penalty",
            SafetyMode::FlatMask => "flat_mask",
            SafetyMode::RankMask => "rank_mask",
        }
    }

    pub fn is_masking(self) -> bool {
        !matches!(self, SafetyMode::Penalty)
    }
}

impl fmt::Display for SafetyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SafetyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "penalty" => Ok(SafetyMode::Penalty),
            "flat_mask" | "flat" => Ok(SafetyMode::FlatMask),
            "rank_mask" | "rank" => Ok(SafetyMode::RankMask),
            _ => Err(Error::BadValue { key: "safety_mode".into(), value: s.into() }),
        }
    }
}

/// How the line-of-sight state of each link is decided every step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LosMode {
    /// Bernoulli draw from the LoS probability, per link per step.
    Stochastic,
    /// LoS iff the LoS probability is at least one half.
    Expected,
}

impl LosMode {
    pub fn as_str(self) -> &'static str {
        match self {
            LosMode::Stochastic => "stochastic",
            LosMode::Expected => "expected",
        }
    }
}

impl FromStr for LosMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stochastic" => Ok(LosMode::Stochastic),
            "expected" => Ok(LosMode::Expected),
            _ => Err(Error::BadValue { key: "los_mode".into(), value: s.into() }),
        }
    }
}

/// Hyperparameters of the shared-policy learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub hidden_layers: Vec<usize>,
    pub gamma: f64,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub eps_start: f64,
    pub eps_end: f64,
    /// Fraction of training episodes over which epsilon decays linearly.
    pub eps_decay_fraction: f64,
    /// Gradient steps between hard copies of the online network into the target.
    pub target_sync_steps: u64,
    /// Optional clip-by-global-norm threshold.
    pub grad_clip: Option<f64>,
    /// Multiplier applied to rewards before they enter TD targets.
    pub reward_scale: f64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            hidden_layers: alloc::vec![128, 128],
            gamma: 0.95,
            learning_rate: 1e-4,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            batch_size: 64,
            buffer_capacity: 100_000,
            eps_start: 1.0,
            eps_end: 0.05,
            eps_decay_fraction: 0.5,
            target_sync_steps: 500,
            grad_clip: None,
            reward_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub num_agents: usize,
    /// Flight altitude h, meters.
    pub altitude: f64,
    /// UABS speed v, m/s.
    pub speed: f64,
    /// Timestep duration, seconds.
    pub timestep: f64,
    /// Field of view on the vertical plane, degrees.
    pub fov_deg: f64,
    pub num_gues: usize,
    pub carrier_ghz: f64,
    pub ptx_dbm: f64,
    pub pn_dbm: f64,
    pub gtx_db: f64,
    /// In-beam receive gain. `None` derives it from the beam solid angle.
    pub grx_db: Option<f64>,
    pub snr_th_db: f64,
    /// Episode length T in steps.
    pub episode_len: usize,
    pub lambda_s: f64,
    pub lambda_c: f64,
    pub train_episodes: usize,
    pub eval_period: usize,
    /// Environment steps between gradient updates.
    pub update_period: usize,
    pub area_width: f64,
    pub area_height: f64,
    /// Service window length N in steps.
    pub window_len: usize,
    /// Served steps needed for a window to count as satisfied.
    pub sat_threshold: usize,
    pub safety_mode: SafetyMode,
    /// Minimum separation between agents, meters.
    pub d_th: f64,
    pub rng_seed: u64,
    pub los_mode: LosMode,
    pub num_beams: usize,
    /// GUE antenna height, meters.
    pub ue_height: f64,
    pub block_size: f64,
    pub vehicle_speed: f64,
    /// Probability of each available turn at an intersection.
    pub turn_prob: f64,
    /// Upper bound on per-step GUE displacement accepted from trace files, m/s.
    pub max_vehicle_speed: f64,
    pub learner: LearnerConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        let altitude = 100.0;
        let fov_deg = 40.0;
        Self {
            num_agents: 3,
            altitude,
            speed: 20.0,
            timestep: 1.0,
            fov_deg,
            num_gues: 80,
            carrier_ghz: 30.0,
            ptx_dbm: 14.0,
            pn_dbm: -106.4,
            gtx_db: 0.0,
            grx_db: None,
            snr_th_db: -13.7,
            episode_len: 80,
            lambda_s: 10.0,
            lambda_c: 1000.0,
            train_episodes: 1000,
            eval_period: 20,
            update_period: 1,
            area_width: 350.0,
            area_height: 170.0,
            window_len: 10,
            sat_threshold: 5,
            safety_mode: SafetyMode::RankMask,
            d_th: 2.0 * altitude * math::tan(math::to_radians(fov_deg) / 2.0),
            rng_seed: 0,
            los_mode: LosMode::Stochastic,
            num_beams: 9,
            ue_height: 1.5,
            block_size: 50.0,
            vehicle_speed: 10.0,
            turn_prob: 0.25,
            max_vehicle_speed: 40.0,
            learner: LearnerConfig::default(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| Error::BadValue { key: key.into(), value: value.into() })
}

fn parse_opt_f64(key: &str, value: &str) -> Result<Option<f64>> {
    match value.trim() {
        "auto" | "none" => Ok(None),
        v => parse(key, v).map(Some),
    }
}

fn fmt_opt(v: Option<f64>, none: &str) -> String {
    v.map_or_else(|| none.to_string(), |x| x.to_string())
}

impl SimConfig {
    /// Reduced-scale preset sized for CI: 100 training episodes, 20 GUEs,
    /// a 200 x 120 m area and an evaluation every 10 episodes.
    pub fn desk_scale() -> Self {
        Self {
            train_episodes: 100,
            num_gues: 20,
            area_width: 200.0,
            area_height: 120.0,
            eval_period: 10,
            ..Self::default()
        }
    }

    /// Distance an agent covers in one step.
    pub fn step_len(&self) -> f64 {
        self.speed * self.timestep
    }

    /// Radius of the field-of-view cone on the ground.
    pub fn coverage_radius(&self) -> f64 {
        self.altitude * math::tan(math::to_radians(self.fov_deg) / 2.0)
    }

    /// Length of the observation feature vector.
    pub fn feature_dim(&self) -> usize {
        3 + 2 * self.num_agents + self.num_beams
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Config(msg.into()));
        let step = self.step_len();
        if self.num_agents < 1 {
            return fail("num_agents must be at least 1");
        }
        if !(step > 0.0) || !step.is_finite() {
            return fail("speed * timestep must be positive");
        }
        if self.episode_len < 1 {
            return fail("episode_len must be at least 1");
        }
        if self.window_len < 1 || self.window_len > self.episode_len {
            return fail("window_len must lie in 1..=episode_len");
        }
        if self.sat_threshold > self.window_len {
            return fail("sat_threshold must not exceed window_len");
        }
        if !(self.d_th >= 1.0) {
            return fail("d_th must be at least 1 m");
        }
        if !(self.area_width > 2.0 * step && self.area_height > 2.0 * step) {
            return fail("area dimensions must exceed twice the step length");
        }
        if !(self.lambda_s >= 0.0 && self.lambda_c >= 0.0) {
            return fail("penalties must be non-negative");
        }
        if !(self.fov_deg > 0.0 && self.fov_deg < 180.0) {
            return fail("fov_deg must lie in (0, 180)");
        }
        if !(self.altitude > 0.0) {
            return fail("altitude must be positive");
        }
        let side = (1..=self.num_beams).find(|k| k * k >= self.num_beams).unwrap_or(0);
        if self.num_beams == 0 || side * side != self.num_beams {
            return fail("num_beams must be a positive perfect square");
        }
        if !(self.carrier_ghz > 0.0) || !(self.pn_dbm < 0.0) {
            return fail("carrier_ghz must be positive and pn_dbm negative");
        }
        if self.update_period < 1 {
            return fail("update_period must be at least 1");
        }
        if !(self.turn_prob >= 0.0 && 2.0 * self.turn_prob <= 1.0) {
            return fail("turn_prob must lie in [0, 0.5]");
        }
        let l = &self.learner;
        if l.batch_size < 1 || l.buffer_capacity < l.batch_size {
            return fail("need 1 <= batch_size <= buffer_capacity");
        }
        if !(0.0..=1.0).contains(&l.gamma) {
            return fail("gamma must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&l.eps_end) || !(l.eps_end..=1.0).contains(&l.eps_start) {
            return fail("need 0 <= eps_end <= eps_start <= 1");
        }
        if !(l.learning_rate > 0.0) || l.target_sync_steps < 1 {
            return fail("learning_rate and target_sync_steps must be positive");
        }
        if l.hidden_layers.is_empty() || l.hidden_layers.contains(&0) {
            return fail("hidden_layers must be non-empty with positive sizes");
        }
        Ok(())
    }

    /// Assigns one field by its flat key name.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let l = &mut self.learner;
        match key.trim() {
            "num_agents" => self.num_agents = parse(key, v)?,
            "altitude" => self.altitude = parse(key, v)?,
            "speed" => self.speed = parse(key, v)?,
            "timestep" => self.timestep = parse(key, v)?,
            "fov_deg" => self.fov_deg = parse(key, v)?,
            "num_gues" => self.num_gues = parse(key, v)?,
            "carrier_ghz" => self.carrier_ghz = parse(key, v)?,
            "ptx_dbm" => self.ptx_dbm = parse(key, v)?,
            "pn_dbm" => self.pn_dbm = parse(key, v)?,
            "gtx_db" => self.gtx_db = parse(key, v)?,
            "grx_db" => self.grx_db = parse_opt_f64(key, v)?,
            "snr_th_db" => self.snr_th_db = parse(key, v)?,
            "episode_len" => self.episode_len = parse(key, v)?,
            "lambda_s" => self.lambda_s = parse(key, v)?,
            "lambda_c" => self.lambda_c = parse(key, v)?,
            "train_episodes" => self.train_episodes = parse(key, v)?,
            "eval_period" => self.eval_period = parse(key, v)?,
            "update_period" => self.update_period = parse(key, v)?,
            "area_width" => self.area_width = parse(key, v)?,
            "area_height" => self.area_height = parse(key, v)?,
            "window_len" => self.window_len = parse(key, v)?,
            "sat_threshold" => self.sat_threshold = parse(key, v)?,
            "safety_mode" => self.safety_mode = v.parse()?,
            "d_th" => self.d_th = parse(key, v)?,
            "rng_seed" => self.rng_seed = parse(key, v)?,
            "los_mode" => self.los_mode = v.parse()?,
            "num_beams" => self.num_beams = parse(key, v)?,
            "ue_height" => self.ue_height = parse(key, v)?,
            "block_size" => self.block_size = parse(key, v)?,
            "vehicle_speed" => self.vehicle_speed = parse(key, v)?,
            "turn_prob" => self.turn_prob = parse(key, v)?,
            "max_vehicle_speed" => self.max_vehicle_speed = parse(key, v)?,
            "hidden_layers" => {
                l.hidden_layers = v
                    .split(',')
                    .map(|s| parse(key, s))
                    .collect::<Result<Vec<usize>>>()?
            }
            "gamma" => l.gamma = parse(key, v)?,
            "learning_rate" => l.learning_rate = parse(key, v)?,
            "adam_beta1" => l.adam_beta1 = parse(key, v)?,
            "adam_beta2" => l.adam_beta2 = parse(key, v)?,
            "adam_eps" => l.adam_eps = parse(key, v)?,
            "batch_size" => l.batch_size = parse(key, v)?,
            "buffer_capacity" => l.buffer_capacity = parse(key, v)?,
            "eps_start" => l.eps_start = parse(key, v)?,
            "eps_end" => l.eps_end = parse(key, v)?,
            "eps_decay_fraction" => l.eps_decay_fraction = parse(key, v)?,
            "target_sync_steps" => l.target_sync_steps = parse(key, v)?,
            "grad_clip" => l.grad_clip = parse_opt_f64(key, v)?,
            "reward_scale" => l.reward_scale = parse(key, v)?,
            other => return Err(Error::UnknownKey(other.into())),
        }
        Ok(())
    }

    /// Every field as a `(key, value)` pair, in a fixed order. Feeding these
    /// back through [`SimConfig::set`] reproduces `self` exactly.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let l = &self.learner;
        let hidden: Vec<String> = l.hidden_layers.iter().map(|h| h.to_string()).collect();
        alloc::vec![
            ("num_agents", self.num_agents.to_string()),
            ("altitude", self.altitude.to_string()),
            ("speed", self.speed.to_string()),
            ("timestep", self.timestep.to_string()),
            ("fov_deg", self.fov_deg.to_string()),
            ("num_gues", self.num_gues.to_string()),
            ("carrier_ghz", self.carrier_ghz.to_string()),
            ("ptx_dbm", self.ptx_dbm.to_string()),
            ("pn_dbm", self.pn_dbm.to_string()),
            ("gtx_db", self.gtx_db.to_string()),
            ("grx_db", fmt_opt(self.grx_db, "auto")),
            ("snr_th_db", self.snr_th_db.to_string()),
            ("episode_len", self.episode_len.to_string()),
            ("lambda_s", self.lambda_s.to_string()),
            ("lambda_c", self.lambda_c.to_string()),
            ("train_episodes", self.train_episodes.to_string()),
            ("eval_period", self.eval_period.to_string()),
            ("update_period", self.update_period.to_string()),
            ("area_width", self.area_width.to_string()),
            ("area_height", self.area_height.to_string()),
            ("window_len", self.window_len.to_string()),
            ("sat_threshold", self.sat_threshold.to_string()),
            ("safety_mode", self.safety_mode.as_str().to_string()),
            ("d_th", self.d_th.to_string()),
            ("rng_seed", self.rng_seed.to_string()),
            ("los_mode", self.los_mode.as_str().to_string()),
            ("num_beams", self.num_beams.to_string()),
            ("ue_height", self.ue_height.to_string()),
            ("block_size", self.block_size.to_string()),
            ("vehicle_speed", self.vehicle_speed.to_string()),
            ("turn_prob", self.turn_prob.to_string()),
            ("max_vehicle_speed", self.max_vehicle_speed.to_string()),
            ("hidden_layers", hidden.join(",")),
            ("gamma", l.gamma.to_string()),
            ("learning_rate", l.learning_rate.to_string()),
            ("adam_beta1", l.adam_beta1.to_string()),
            ("adam_beta2", l.adam_beta2.to_string()),
            ("adam_eps", l.adam_eps.to_string()),
            ("batch_size", l.batch_size.to_string()),
            ("buffer_capacity", l.buffer_capacity.to_string()),
            ("eps_start", l.eps_start.to_string()),
            ("eps_end", l.eps_end.to_string()),
            ("eps_decay_fraction", l.eps_decay_fraction.to_string()),
            ("target_sync_steps", l.target_sync_steps.to_string()),
            ("grad_clip", fmt_opt(l.grad_clip, "none")),
            ("reward_scale", l.reward_scale.to_string()),
        ]
    }

    /// Canonical `key = value` text, one entry per line.
    pub fn to_kv_string(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.entries() {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }
}
