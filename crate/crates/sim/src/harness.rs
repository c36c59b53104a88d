//! Training, evaluation, mode comparison and the data files they emit.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use uabs_core::config::SafetyMode;
use uabs_core::learn::{encode, epsilon_for_episode, select_action, Experience, QNetwork, TrainState};
use uabs_core::rng::{stream_rng, Stream};
use uabs_core::safety::ActionMask;
use uabs_core::scenario::{generate_manhattan_traces, GueTrace};
use uabs_core::service::pg_from_log;
use uabs_core::{Action, Env, Observation, SimConfig, StepOutcome};

use crate::checkpoint::Checkpoint;
use crate::config_io::config_hash;
use crate::error::{SimError, SimResult};
use crate::shared_replay::SharedReplay;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Train,
    Eval,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Train => "train",
            Phase::Eval => "eval",
        }
    }
}

/// Per-episode record written to `metrics.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeMetrics {
    pub phase: Phase,
    /// Training episode index; for evaluation rows, the number of training
    /// episodes completed before the pass.
    pub episode: usize,
    /// `R`, the sum of every agent's reward over the episode.
    pub reward: f64,
    pub collisions: usize,
    pub separations: usize,
    pub fallbacks: usize,
    /// Mean over steps of the smallest pairwise agent distance.
    pub mean_min_distance: f64,
    pub epsilon: f64,
    pub grad_steps: u64,
    pub mean_loss: Option<f64>,
    /// `pg[k]` is P_g with satisfaction threshold `k`, for `k` in `0..=N`.
    pub pg: Vec<f64>,
    /// Sum of agents' rewards at each step, so `reward` can be re-derived.
    pub step_rewards: Vec<f64>,
    /// Elapsed time; kept out of the CSV so reruns stay byte-identical.
    pub wall_seconds: f64,
}

impl EpisodeMetrics {
    pub fn had_collision(&self) -> bool {
        self.collisions > 0
    }

    pub fn pg_at(&self, threshold: usize) -> f64 {
        self.pg[threshold]
    }
}

/// Accumulates step outcomes into episode metrics.
#[derive(Debug, Default)]
struct Tally {
    step_rewards: Vec<f64>,
    collisions: usize,
    separations: usize,
    fallbacks: usize,
    min_distance_sum: f64,
}

impl Tally {
    fn add(&mut self, out: &StepOutcome) {
        self.step_rewards.push(out.rewards.iter().sum());
        self.collisions += out.collisions();
        self.separations += out.separations();
        self.fallbacks += out.fallbacks.iter().filter(|&&f| f).count();
        self.min_distance_sum += out.min_distance;
    }

    fn finish(self, phase: Phase, episode: usize, env: &Env<'_>) -> SimResult<EpisodeMetrics> {
        let n = env.config().window_len;
        let log = &env.service().log;
        let pg = (0..=n).map(|k| pg_from_log(log, k)).collect::<Result<Vec<_>, _>>()?;
        let steps = self.step_rewards.len().max(1) as f64;
        Ok(EpisodeMetrics {
            phase,
            episode,
            reward: self.step_rewards.iter().sum(),
            collisions: self.collisions,
            separations: self.separations,
            fallbacks: self.fallbacks,
            mean_min_distance: self.min_distance_sum / steps,
            epsilon: 0.0,
            grad_steps: 0,
            mean_loss: None,
            pg,
            step_rewards: self.step_rewards,
            wall_seconds: 0.0,
        })
    }
}

/// Where GUE traces come from. Missing sets are generated from the run seed
/// on separate streams, so evaluation traces are never seen in training.
#[derive(Debug, Clone, Default)]
pub struct TraceSet {
    pub train: Option<Vec<GueTrace>>,
    pub eval: Option<Vec<GueTrace>>,
}

pub fn generate_traces(config: &SimConfig, stream: Stream, index: u64) -> SimResult<Vec<GueTrace>> {
    let mut rng = stream_rng(config.rng_seed, stream, index);
    Ok(generate_manhattan_traces(config, config.block_size, config.vehicle_speed, &mut rng)?)
}

fn encode_all(obs: &[Observation], config: &SimConfig) -> Vec<Vec<f64>> {
    obs.iter().map(|o| encode(o, config)).collect()
}

/// One full episode where `choose(agent, features, mask)` picks every
/// action. Nothing is learned.
pub fn rollout<F>(config: &SimConfig, traces: &[GueTrace], env_rng: ChaCha8Rng, phase: Phase, mut choose: F) -> SimResult<EpisodeMetrics>
where
    F: FnMut(usize, &[f64], &ActionMask) -> uabs_core::Result<Action>,
{
    let started = Instant::now();
    let mut env = Env::new(config, traces, env_rng)?;
    let mut feats = encode_all(&env.observations(), config);
    let mut tally = Tally::default();
    while !env.is_done() {
        let decision = env.decide(|u, mask| choose(u, &feats[u], mask))?;
        let out = env.step(&decision.actions)?;
        tally.add(&out);
        feats = encode_all(&out.observations, config);
    }
    let mut m = tally.finish(phase, 0, &env)?;
    m.wall_seconds = started.elapsed().as_secs_f64();
    Ok(m)
}

/// Episode with uniformly random legal actions.
pub fn random_rollout(config: &SimConfig, traces: &[GueTrace], env_rng: ChaCha8Rng, action_rng: &mut ChaCha8Rng) -> SimResult<EpisodeMetrics> {
    rollout(config, traces, env_rng, Phase::Train, |_, _, mask| {
        let k = action_rng.random_range(0..mask.count());
        Ok(mask.legal_actions().nth(k).expect("k < count"))
    })
}

/// Greedy masked rollout of `net` on the fixed evaluation episode.
pub fn evaluate(config: &SimConfig, net: &QNetwork, eval_traces: &[GueTrace]) -> SimResult<EpisodeMetrics> {
    let env_rng = stream_rng(config.rng_seed, Stream::EvalEpisode, 0);
    let mut act_rng = stream_rng(config.rng_seed, Stream::EvalEpisode, 1);
    rollout(config, eval_traces, env_rng, Phase::Eval, |_, x, mask| select_action(net, x, mask, 0.0, &mut act_rng))
}

/// Loads a checkpoint (refusing a config mismatch) and evaluates it.
pub fn evaluate_checkpoint(path: &Path, config: &SimConfig, eval_traces: &[GueTrace]) -> SimResult<EpisodeMetrics> {
    let ck = Checkpoint::load(path, config)?;
    evaluate(config, &ck.network, eval_traces)
}

#[derive(Debug, Clone, Default)]
pub struct TrainOptions {
    pub out_dir: Option<PathBuf>,
    /// Print one line per evaluation pass to stderr.
    pub verbose: bool,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub train: Vec<EpisodeMetrics>,
    pub evals: Vec<EpisodeMetrics>,
    /// Index into `evals` of the pass with the largest `R`.
    pub best_eval: Option<usize>,
    pub best_checkpoint: Option<Checkpoint>,
    pub final_network: QNetwork,
    pub wall_seconds: f64,
}

impl TrainReport {
    pub fn best(&self) -> Option<&EpisodeMetrics> {
        self.best_eval.map(|i| &self.evals[i])
    }

    pub fn train_collision_fraction(&self) -> f64 {
        fraction(&self.train, EpisodeMetrics::had_collision)
    }

    pub fn eval_collision_fraction(&self) -> f64 {
        fraction(&self.evals, EpisodeMetrics::had_collision)
    }
}

fn fraction(rows: &[EpisodeMetrics], f: impl Fn(&EpisodeMetrics) -> bool) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    rows.iter().filter(|m| f(m)).count() as f64 / rows.len() as f64
}

/// Transition of one agent waiting for the mask it faces at the next step.
struct Pending {
    obs: Vec<f64>,
    action: Action,
    reward: f64,
}

struct Learner<'c> {
    config: &'c SimConfig,
    state: TrainState,
    replay: SharedReplay,
    explore_rng: ChaCha8Rng,
    batch_rng: ChaCha8Rng,
    env_steps: u64,
}

impl<'c> Learner<'c> {
    fn new(config: &'c SimConfig) -> Self {
        let seed = config.rng_seed;
        let state = TrainState::new(config.feature_dim(), &config.learner, &mut stream_rng(seed, Stream::NetworkInit, 0));
        Self {
            config,
            state,
            replay: SharedReplay::new(config.learner.buffer_capacity),
            explore_rng: stream_rng(seed, Stream::Exploration, 0),
            batch_rng: stream_rng(seed, Stream::Minibatch, 0),
            env_steps: 0,
        }
    }

    fn maybe_update(&mut self, losses: &mut Vec<f64>) -> SimResult<()> {
        self.env_steps += 1;
        let batch = self.config.learner.batch_size;
        if self.env_steps % self.config.update_period as u64 != 0 || self.replay.len() < batch {
            return Ok(());
        }
        let sample = self.replay.sample(batch, &mut self.batch_rng);
        let refs: Vec<&Experience> = sample.iter().collect();
        losses.push(self.state.sgd_update(&refs)?);
        Ok(())
    }

    fn episode(&mut self, e: usize, traces: &[GueTrace]) -> SimResult<EpisodeMetrics> {
        let config = self.config;
        let started = Instant::now();
        let epsilon = epsilon_for_episode(e, config);
        self.state.epsilon = epsilon;
        let mut env = Env::new(config, traces, stream_rng(config.rng_seed, Stream::TrainEpisode, e as u64))?;
        let mut feats = encode_all(&env.observations(), config);
        let mut pending: Vec<Option<Pending>> = (0..config.num_agents).map(|_| None).collect();
        let mut tally = Tally::default();
        let mut losses = Vec::new();
        while !env.is_done() {
            // agents act with the policy as of the last update
            let policy = self.state.snapshot();
            let rng = &mut self.explore_rng;
            let decision = env.decide(|u, mask| policy.act(&feats[u], mask, epsilon, rng))?;
            let ready = pending.iter_mut().zip(&feats).zip(&decision.masks).filter_map(|((p, x), mask)| {
                p.take().map(|p| Experience {
                    obs: p.obs,
                    action: p.action,
                    reward: p.reward,
                    next_obs: x.clone(),
                    next_mask: *mask,
                    terminal: false,
                })
            });
            self.replay.extend(ready.collect::<Vec<_>>());

            let out = env.step(&decision.actions)?;
            tally.add(&out);
            let next = encode_all(&out.observations, config);
            if out.done {
                let terminal = (0..config.num_agents).map(|u| Experience {
                    obs: feats[u].clone(),
                    action: decision.actions[u],
                    reward: out.rewards[u],
                    next_obs: next[u].clone(),
                    next_mask: env.legal_geometry_actions(u),
                    terminal: true,
                });
                self.replay.extend(terminal.collect::<Vec<_>>());
            } else {
                for (u, slot) in pending.iter_mut().enumerate() {
                    *slot = Some(Pending { obs: feats[u].clone(), action: decision.actions[u], reward: out.rewards[u] });
                }
            }
            feats = next;
            self.maybe_update(&mut losses)?;
        }
        let mut m = tally.finish(Phase::Train, e, &env)?;
        m.epsilon = epsilon;
        m.grad_steps = self.state.grad_steps;
        m.mean_loss = (!losses.is_empty()).then(|| losses.iter().sum::<f64>() / losses.len() as f64);
        m.wall_seconds = started.elapsed().as_secs_f64();
        Ok(m)
    }
}

/// Trains for `train_episodes` episodes and evaluates the greedy policy on
/// the held-out traces after every `eval_period` of them. With an output
/// directory, writes `metrics.csv`, `eval_pg.csv`, `summary.txt`,
/// `config.txt`, `manifest.json` and `best.ckpt.json`.
pub fn train(config: &SimConfig, traces: &TraceSet, opts: &TrainOptions) -> SimResult<TrainReport> {
    config.validate()?;
    let started = Instant::now();
    if let Some(dir) = &opts.out_dir {
        fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e))?;
        write_file(&dir.join("config.txt"), &config.to_kv_string())?;
        write_manifest(dir, config)?;
    }
    let eval_traces = match &traces.eval {
        Some(t) => t.clone(),
        None => generate_traces(config, Stream::EvalTraces, 0)?,
    };
    let mut learner = Learner::new(config);
    let mut report = TrainReport {
        train: Vec::with_capacity(config.train_episodes),
        evals: Vec::new(),
        best_eval: None,
        best_checkpoint: None,
        final_network: learner.state.online.clone(),
        wall_seconds: 0.0,
    };
    for e in 0..config.train_episodes {
        let generated;
        let episode_traces = match &traces.train {
            Some(t) => t.as_slice(),
            None => {
                generated = generate_traces(config, Stream::TrainTraces, e as u64)?;
                generated.as_slice()
            }
        };
        report.train.push(learner.episode(e, episode_traces)?);

        if config.eval_period > 0 && (e + 1) % config.eval_period == 0 {
            let mut m = evaluate(config, &learner.state.online, &eval_traces)?;
            m.episode = e + 1;
            m.grad_steps = learner.state.grad_steps;
            if opts.verbose {
                eprintln!(
                    "[{}] eval after {:>5} episodes: R = {:.1}, collisions = {}, P_g(N^s={}) = {:.3}",
                    config.safety_mode.as_str(),
                    e + 1,
                    m.reward,
                    m.collisions,
                    config.sat_threshold,
                    m.pg_at(config.sat_threshold)
                );
            }
            let better = report.best().is_none_or(|b| m.reward > b.reward);
            if better {
                report.best_eval = Some(report.evals.len());
                report.best_checkpoint = Some(Checkpoint::new(config, e + 1, m.reward, learner.state.online.clone()));
            }
            report.evals.push(m);
        }
    }
    report.final_network = learner.state.online.clone();
    report.wall_seconds = started.elapsed().as_secs_f64();
    if let Some(dir) = &opts.out_dir {
        let mut rows = report.train.clone();
        rows.extend(report.evals.iter().cloned());
        write_metrics_csv(&dir.join("metrics.csv"), &rows, config.window_len)?;
        if let Some(best) = report.best() {
            write_eval_pg_csv(&dir.join("eval_pg.csv"), best)?;
        }
        if let Some(ck) = &report.best_checkpoint {
            ck.save(&dir.join("best.ckpt.json"))?;
        }
        write_file(&dir.join("summary.txt"), &train_summary(config, &report))?;
    }
    Ok(report)
}

fn write_file(path: &Path, text: &str) -> SimResult<()> {
    fs::write(path, text).map_err(|e| SimError::io(path, e))
}

/// Run description written next to the outputs. The start time lives here
/// and in `summary.txt` only.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub config: String,
    pub config_hash: String,
    pub seed: u64,
    pub mode: SafetyMode,
    pub start_unix_seconds: u64,
    pub build: String,
    pub outputs: Vec<String>,
}

fn write_manifest(dir: &Path, config: &SimConfig) -> SimResult<()> {
    let manifest = RunManifest {
        config: config.to_kv_string(),
        config_hash: config_hash(config),
        seed: config.rng_seed,
        mode: config.safety_mode,
        start_unix_seconds: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
        build: format!("uabs-sim {} ({})", env!("CARGO_PKG_VERSION"), if cfg!(debug_assertions) { "debug" } else { "release" }),
        outputs: ["metrics.csv", "eval_pg.csv", "summary.txt", "best.ckpt.json"].map(String::from).to_vec(),
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| SimError::Checkpoint(e.to_string()))?;
    write_file(&dir.join("manifest.json"), &text)
}

/// Header of `metrics.csv` for window length `n`.
pub fn metrics_header(n: usize) -> Vec<String> {
    let mut h: Vec<String> = [
        "phase",
        "episode",
        "reward",
        "collisions",
        "separations",
        "fallbacks",
        "collision_episode",
        "mean_min_distance",
        "epsilon",
        "grad_steps",
        "mean_loss",
    ]
    .map(String::from)
    .to_vec();
    h.extend((0..=n).map(|k| format!("pg_{k}")));
    h
}

pub fn write_metrics_csv(path: &Path, rows: &[EpisodeMetrics], n: usize) -> SimResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(metrics_header(n))?;
    for m in rows {
        let mut rec = vec![
            m.phase.as_str().to_string(),
            m.episode.to_string(),
            m.reward.to_string(),
            m.collisions.to_string(),
            m.separations.to_string(),
            m.fallbacks.to_string(),
            u8::from(m.had_collision()).to_string(),
            m.mean_min_distance.to_string(),
            m.epsilon.to_string(),
            m.grad_steps.to_string(),
            m.mean_loss.map_or_else(String::new, |l| l.to_string()),
        ];
        rec.extend(m.pg.iter().map(|p| p.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| SimError::io(path, e))
}

pub fn write_eval_pg_csv(path: &Path, m: &EpisodeMetrics) -> SimResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["sat_threshold", "pg"])?;
    for (k, p) in m.pg.iter().enumerate() {
        w.write_record([k.to_string(), p.to_string()])?;
    }
    w.flush().map_err(|e| SimError::io(path, e))
}

fn train_summary(config: &SimConfig, r: &TrainReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "mode: {}", config.safety_mode.as_str());
    let _ = writeln!(s, "seed: {}", config.rng_seed);
    let _ = writeln!(s, "config_hash: {}", config_hash(config));
    let _ = writeln!(s, "training episodes: {}", r.train.len());
    let _ = writeln!(s, "evaluation passes: {}", r.evals.len());
    let _ = writeln!(s, "training episodes with a collision: {:.1}%", 100.0 * r.train_collision_fraction());
    let _ = writeln!(s, "evaluation passes with a collision: {:.1}%", 100.0 * r.eval_collision_fraction());
    if let Some(best) = r.best() {
        let _ = writeln!(s, "best evaluation R: {} (after {} episodes)", best.reward, best.episode);
        let _ = writeln!(s, "best evaluation P_g at threshold {}: {}", config.sat_threshold, best.pg_at(config.sat_threshold));
    }
    if let Some(last) = r.evals.last() {
        let _ = writeln!(s, "final evaluation R: {}", last.reward);
    }
    let _ = writeln!(s, "wall-clock seconds: {:.2}", r.wall_seconds);
    s
}

/// One (mode, seed) training run as summarized by [`compare`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub mode: SafetyMode,
    pub seed: u64,
    pub train_collision_pct: f64,
    pub eval_collision_pct: f64,
    pub final_reward: f64,
    pub best_reward: f64,
    /// P_g at the configured threshold, from the best evaluation pass.
    pub best_pg: f64,
    pub pg_curve: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
}

impl CompareReport {
    pub fn rows_for(&self, mode: SafetyMode) -> impl Iterator<Item = &CompareRow> {
        self.rows.iter().filter(move |r| r.mode == mode)
    }

    pub fn median_best_reward(&self, mode: SafetyMode) -> Option<f64> {
        median(self.rows_for(mode).map(|r| r.best_reward).collect())
    }

    pub fn median_best_pg(&self, mode: SafetyMode) -> Option<f64> {
        median(self.rows_for(mode).map(|r| r.best_pg).collect())
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "mode        seeds  train_coll%  eval_coll%  median_best_R  median_P_g  best_R_range");
        for mode in SafetyMode::ALL {
            let rows: Vec<&CompareRow> = self.rows_for(mode).collect();
            if rows.is_empty() {
                continue;
            }
            let med = |f: fn(&CompareRow) -> f64| median(rows.iter().map(|r| f(r)).collect()).unwrap_or(f64::NAN);
            let lo = rows.iter().map(|r| r.best_reward).fold(f64::INFINITY, f64::min);
            let hi = rows.iter().map(|r| r.best_reward).fold(f64::NEG_INFINITY, f64::max);
            let _ = writeln!(
                s,
                "{:<11} {:>5}  {:>11.1}  {:>10.1}  {:>13.1}  {:>10.4}  [{lo:.1}, {hi:.1}]",
                mode.as_str(),
                rows.len(),
                med(|r| r.train_collision_pct),
                med(|r| r.eval_collision_pct),
                med(|r| r.best_reward),
                med(|r| r.best_pg),
            );
        }
        s
    }
}

pub fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Trains every (mode, seed) pair on `base` and tabulates the outcomes.
/// With an output directory each run gets `<mode>_seed<seed>/` and the
/// table goes to `compare.csv` and `compare_summary.txt`.
pub fn compare(base: &SimConfig, modes: &[SafetyMode], seeds: &[u64], traces: &TraceSet, opts: &TrainOptions) -> SimResult<CompareReport> {
    let mut rows = Vec::new();
    for &mode in modes {
        for &seed in seeds {
            let config = SimConfig { safety_mode: mode, rng_seed: seed, ..base.clone() };
            let run_opts = TrainOptions {
                out_dir: opts.out_dir.as_ref().map(|d| d.join(format!("{}_seed{seed}", mode.as_str()))),
                verbose: opts.verbose,
            };
            let r = train(&config, traces, &run_opts)?;
            let best = r.best();
            rows.push(CompareRow {
                mode,
                seed,
                train_collision_pct: 100.0 * r.train_collision_fraction(),
                eval_collision_pct: 100.0 * r.eval_collision_fraction(),
                final_reward: r.evals.last().map_or(f64::NAN, |m| m.reward),
                best_reward: best.map_or(f64::NAN, |m| m.reward),
                best_pg: best.map_or(f64::NAN, |m| m.pg_at(config.sat_threshold)),
                pg_curve: best.map_or_else(Vec::new, |m| m.pg.clone()),
            });
        }
    }
    let report = CompareReport { rows };
    if let Some(dir) = &opts.out_dir {
        fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e))?;
        let path = dir.join("compare.csv");
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record([
            "mode",
            "seed",
            "train_collision_pct",
            "eval_collision_pct",
            "final_reward",
            "best_reward",
            "best_pg",
            "pg_curve",
        ])?;
        for r in &report.rows {
            let curve: Vec<String> = r.pg_curve.iter().map(f64::to_string).collect();
            w.write_record([
                r.mode.as_str().to_string(),
                r.seed.to_string(),
                r.train_collision_pct.to_string(),
                r.eval_collision_pct.to_string(),
                r.final_reward.to_string(),
                r.best_reward.to_string(),
                r.best_pg.to_string(),
                curve.join(";"),
            ])?;
        }
        w.flush().map_err(|e| SimError::io(&path, e))?;
        write_file(&dir.join("compare_summary.txt"), &report.summary())?;
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageReport {
    /// Ground radius of one agent's field of view.
    pub coverage_radius: f64,
    /// Area one agent's beams cover; the tangent footprints are disjoint,
    /// so this equals the area of the coverage disk.
    pub per_agent_area: f64,
    /// Fraction of the service area covered if no footprints overlap.
    pub fraction: f64,
}

/// Instantaneous coverage fraction `M pi r_cov^2 / (W H)`.
pub fn coverage_report(config: &SimConfig) -> CoverageReport {
    let r = config.coverage_radius();
    let per_agent = std::f64::consts::PI * r * r;
    CoverageReport {
        coverage_radius: r,
        per_agent_area: per_agent,
        fraction: config.num_agents as f64 * per_agent / (config.area_width * config.area_height),
    }
}
