//! The multi-agent environment: placement, simultaneous moves, service
//! updates, rewards and observations.

use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{LinkModel, LosState};
use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::safety::{self, ActionMask, JointDecision, SafetyParams};
use crate::scenario::{gue_positions_at, Area, GueTrace, Position};
use crate::service::{self, BeamPriorityVector, ServiceTracker, WindowSpec};

/// Placement attempts before giving up.
pub const MAX_PLACEMENT_ATTEMPTS: usize = 1000;

/// Planar move of one step. Up is +y, Right is +x.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Up,
    Right,
    Down,
    Left,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::Up, Action::Right, Action::Down, Action::Left];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Self::ALL.get(i).copied()
    }

    pub fn unit(self) -> (f64, f64) {
        match self {
            Action::Up => (0.0, 1.0),
            Action::Right => (1.0, 0.0),
            Action::Down => (0.0, -1.0),
            Action::Left => (-1.0, 0.0),
        }
    }
}

/// What agent `agent` observes at step `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub agent: usize,
    pub self_xy: Position,
    pub t: usize,
    /// Every agent's position in agent-index order, including the observer.
    pub fleet: Vec<Position>,
    pub beam_info: BeamPriorityVector,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SafetyEvent {
    /// Two agents closer than `d_th`.
    Separation { a: usize, b: usize, distance: f64 },
    /// Two agents closer than 1 m; always accompanied by a separation event.
    Collision { a: usize, b: usize, distance: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observations: Vec<Observation>,
    pub rewards: Vec<f64>,
    pub events: Vec<SafetyEvent>,
    /// Agents whose mask needed the fallback this step.
    pub fallbacks: Vec<bool>,
    /// Smallest pairwise distance after the move; infinite for one agent.
    pub min_distance: f64,
    pub done: bool,
}

impl StepOutcome {
    pub fn collisions(&self) -> usize {
        self.events.iter().filter(|e| matches!(e, SafetyEvent::Collision { .. })).count()
    }

    pub fn separations(&self) -> usize {
        self.events.iter().filter(|e| matches!(e, SafetyEvent::Separation { .. })).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardParams {
    pub d_th: f64,
    pub lambda_s: f64,
    pub lambda_c: f64,
}

/// Per-agent reward from distances evaluated after every agent has moved.
/// The most severe branch wins: collision, then separation, then the summed
/// priority covered.
pub fn reward_of(distances: impl IntoIterator<Item = f64>, b_next: &BeamPriorityVector, p: &RewardParams) -> f64 {
    let mut min = f64::INFINITY;
    for d in distances {
        min = min.min(d);
    }
    if min < 1.0 {
        -p.lambda_c
    } else if min < p.d_th {
        -p.lambda_s
    } else {
        b_next.l1() as f64
    }
}

pub struct Env<'a> {
    config: &'a SimConfig,
    link: LinkModel,
    params: SafetyParams,
    rewards: RewardParams,
    traces: &'a [GueTrace],
    rng: ChaCha8Rng,
    agents: Vec<Position>,
    gues: Vec<Position>,
    t: usize,
    service: ServiceTracker,
    beam_infos: Vec<BeamPriorityVector>,
}

impl<'a> Env<'a> {
    /// Builds an environment and performs the first reset.
    pub fn new(config: &'a SimConfig, traces: &'a [GueTrace], rng: ChaCha8Rng) -> Result<Self> {
        config.validate()?;
        for tr in traces {
            if tr.positions.len() < config.episode_len + 1 {
                return Err(Error::Trace {
                    gue_id: tr.gue_id,
                    reason: alloc::format!("shorter than {} steps", config.episode_len + 1),
                });
            }
        }
        let mut env = Self {
            config,
            link: LinkModel::from_config(config),
            params: SafetyParams::of(config),
            rewards: RewardParams { d_th: config.d_th, lambda_s: config.lambda_s, lambda_c: config.lambda_c },
            traces,
            rng,
            agents: Vec::new(),
            gues: Vec::new(),
            t: 0,
            service: ServiceTracker::new(traces.len(), Self::window_spec(config)),
            beam_infos: Vec::new(),
        };
        env.reset()?;
        Ok(env)
    }

    fn window_spec(config: &SimConfig) -> WindowSpec {
        WindowSpec { len: config.window_len, sat_threshold: config.sat_threshold }
    }

    /// Places agent 0 uniformly inside the area and the others uniformly on
    /// its perimeter, resampling until every pair is at least `d_th` apart.
    pub fn reset(&mut self) -> Result<Vec<Observation>> {
        self.agents = place_agents(self.config.num_agents, self.params.area, self.params.d_th, &mut self.rng)?;
        self.t = 0;
        self.service = ServiceTracker::new(self.traces.len(), Self::window_spec(self.config));
        self.refresh_service()?;
        Ok(self.observations())
    }

    fn refresh_service(&mut self) -> Result<()> {
        self.gues = gue_positions_at(self.traces, self.t)?;
        let los = LosState::draw(self.config.los_mode, &self.gues, &self.agents, &mut self.rng);
        let served = self
            .gues
            .iter()
            .enumerate()
            .map(|(g, &p)| service::is_served(g, p, &self.agents, &self.link, &los))
            .collect::<Result<Vec<bool>>>()?;
        self.service.record_step(self.t, &served);
        if self.t == self.config.episode_len {
            self.service.finish(self.t);
        }
        self.beam_infos = self
            .agents
            .iter()
            .map(|&u| service::per_beam_info(u, &self.link.layout, self.gues.iter().copied().zip(self.service.priorities())))
            .collect();
        Ok(())
    }

    pub fn observations(&self) -> Vec<Observation> {
        (0..self.agents.len())
            .map(|u| Observation {
                agent: u,
                self_xy: self.agents[u],
                t: self.t,
                fleet: self.agents.clone(),
                beam_info: self.beam_infos[u].clone(),
            })
            .collect()
    }

    /// Runs the active safety mode's decision protocol; `choose` sees each
    /// agent's final mask in commitment order.
    pub fn decide<F>(&self, choose: F) -> Result<JointDecision>
    where
        F: FnMut(usize, &ActionMask) -> Result<Action>,
    {
        safety::resolve_joint(self.config.safety_mode, &self.agents, &self.beam_infos, &self.params, choose)
    }

    /// Masks outside any move: out-of-area moves only.
    pub fn legal_geometry_actions(&self, u: usize) -> ActionMask {
        safety::bounds_mask(self.agents[u], &self.params)
    }

    /// Moves every agent simultaneously. Each action must be legal under the
    /// mask the decision protocol assigns it.
    pub fn step(&mut self, actions: &[Action]) -> Result<StepOutcome> {
        if self.t >= self.config.episode_len {
            return Err(Error::EpisodeOver(self.t));
        }
        let decision = safety::verify_joint(
            self.config.safety_mode,
            &self.agents,
            &self.beam_infos,
            &self.params,
            actions,
        )?;
        for (p, &a) in self.agents.iter_mut().zip(actions) {
            *p = safety::next_position(*p, a, self.params.step);
        }
        self.t += 1;
        self.refresh_service()?;

        let m = self.agents.len();
        let mut events = Vec::new();
        let mut min_distance = f64::INFINITY;
        for a in 0..m {
            for b in a + 1..m {
                let d = self.agents[a].distance(self.agents[b]);
                min_distance = min_distance.min(d);
                if d < self.params.d_th {
                    events.push(SafetyEvent::Separation { a, b, distance: d });
                }
                if d < 1.0 {
                    events.push(SafetyEvent::Collision { a, b, distance: d });
                }
            }
        }
        let rewards = (0..m)
            .map(|u| {
                let me = self.agents[u];
                let others = self.agents.iter().enumerate().filter(|&(w, _)| w != u).map(|(_, q)| me.distance(*q));
                reward_of(others, &self.beam_infos[u], &self.rewards)
            })
            .collect();
        Ok(StepOutcome {
            observations: self.observations(),
            rewards,
            events,
            fallbacks: decision.fallbacks,
            min_distance,
            done: self.t == self.config.episode_len,
        })
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn is_done(&self) -> bool {
        self.t >= self.config.episode_len
    }

    pub fn agents(&self) -> &[Position] {
        &self.agents
    }

    pub fn gues(&self) -> &[Position] {
        &self.gues
    }

    pub fn beam_infos(&self) -> &[BeamPriorityVector] {
        &self.beam_infos
    }

    pub fn service(&self) -> &ServiceTracker {
        &self.service
    }

    pub fn config(&self) -> &SimConfig {
        self.config
    }

    pub fn link(&self) -> &LinkModel {
        &self.link
    }

    pub fn safety_params(&self) -> &SafetyParams {
        &self.params
    }
}

fn perimeter_point<R: Rng + ?Sized>(area: Area, rng: &mut R) -> Position {
    let (w, h) = (area.width, area.height);
    let s = rng.random::<f64>() * 2.0 * (w + h);
    if s < w {
        Position::new(s, 0.0)
    } else if s < w + h {
        Position::new(w, s - w)
    } else if s < 2.0 * w + h {
        Position::new(w - (s - w - h), h)
    } else {
        Position::new(0.0, h - (s - 2.0 * w - h))
    }
}

pub fn place_agents<R: Rng + ?Sized>(m: usize, area: Area, d_th: f64, rng: &mut R) -> Result<Vec<Position>> {
    for _ in 0..MAX_PLACEMENT_ATTEMPTS {
        let mut ps = Vec::with_capacity(m);
        ps.push(Position::new(rng.random::<f64>() * area.width, rng.random::<f64>() * area.height));
        for _ in 1..m {
            ps.push(perimeter_point(area, rng));
        }
        let separated = (0..m).all(|a| (a + 1..m).all(|b| ps[a].distance(ps[b]) >= d_th));
        if separated {
            return Ok(ps);
        }
    }
    Err(Error::Placement { agents: m, d_th, attempts: MAX_PLACEMENT_ATTEMPTS })
}
