use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use uabs_core::config::SafetyMode;
use uabs_core::rng::Stream;
use uabs_core::SimConfig;
use uabs_sim::config_io::{apply_overrides, load_config};
use uabs_sim::harness::{self, Phase, TraceSet, TrainOptions};
use uabs_sim::traces::{load_traces, save_traces};

#[derive(Debug, Parser)]
#[command(name = "uabs", version, about = "UAV base station swarm simulator and trainer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a shared policy and write metrics and the best checkpoint.
    Train {
        #[command(flatten)]
        common: Common,
        /// Training traces (CSV `t,gue_id,x,y`); generated per episode if absent.
        #[arg(long)]
        traces: Option<PathBuf>,
        /// Held-out evaluation traces; generated from a separate stream if absent.
        #[arg(long)]
        eval_traces: Option<PathBuf>,
        #[arg(long)]
        quiet: bool,
    },
    /// Evaluate a checkpoint greedily on the held-out traces.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        eval_traces: Option<PathBuf>,
    },
    /// Train every mode over several seeds and tabulate the results.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Comma-separated seeds.
        #[arg(long, default_value = "0,1,2,3,4", value_delimiter = ',')]
        seeds: Vec<u64>,
        /// Comma-separated modes.
        #[arg(long, default_value = "penalty,flat_mask,rank_mask", value_delimiter = ',')]
        modes: Vec<SafetyMode>,
        #[arg(long)]
        quiet: bool,
    },
    /// Write synthetic Manhattan traces to a CSV file.
    GenTraces {
        #[command(flatten)]
        common: Common,
        /// Output file; defaults to `<out-dir>/traces.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Draw from the evaluation stream instead of the training stream.
        #[arg(long)]
        eval: bool,
        /// Stream index (the training episode number for training traces).
        #[arg(long, default_value_t = 0)]
        index: u64,
    },
    /// Print the instantaneous coverage fraction of the fleet.
    Coverage {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Config file with `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one config key, e.g. `--set num_agents=4`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    mode: Option<SafetyMode>,
    /// Start from the reduced-scale preset instead of the full defaults.
    #[arg(long)]
    desk: bool,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

impl Common {
    fn config(&self) -> Result<SimConfig> {
        let base = if self.desk { SimConfig::desk_scale() } else { SimConfig::default() };
        let mut config = match &self.config {
            Some(p) => load_config(p, base).with_context(|| format!("loading {}", p.display()))?,
            None => base,
        };
        apply_overrides(&mut config, &self.set)?;
        if let Some(seed) = self.seed {
            config.rng_seed = seed;
        }
        if let Some(mode) = self.mode {
            config.safety_mode = mode;
        }
        config.validate()?;
        Ok(config)
    }
}

fn optional_traces(path: Option<&Path>, config: &SimConfig) -> Result<Option<Vec<uabs_core::GueTrace>>> {
    path.map(|p| load_traces(p, config).with_context(|| format!("loading {}", p.display()))).transpose()
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Train { common, traces, eval_traces, quiet } => {
            let config = common.config()?;
            let set = TraceSet {
                train: optional_traces(traces.as_deref(), &config)?,
                eval: optional_traces(eval_traces.as_deref(), &config)?,
            };
            let opts = TrainOptions { out_dir: Some(common.out_dir.clone()), verbose: !quiet };
            let report = harness::train(&config, &set, &opts)?;
            print!("{}", std::fs::read_to_string(common.out_dir.join("summary.txt"))?);
            if report.train.is_empty() {
                println!("no training requested; config written to {}", common.out_dir.join("config.txt").display());
            }
        }
        Command::Eval { common, checkpoint, eval_traces } => {
            let config = common.config()?;
            let traces = match optional_traces(eval_traces.as_deref(), &config)? {
                Some(t) => t,
                None => harness::generate_traces(&config, Stream::EvalTraces, 0)?,
            };
            let mut m = harness::evaluate_checkpoint(&checkpoint, &config, &traces)?;
            m.phase = Phase::Eval;
            std::fs::create_dir_all(&common.out_dir)?;
            harness::write_metrics_csv(&common.out_dir.join("metrics.csv"), std::slice::from_ref(&m), config.window_len)?;
            harness::write_eval_pg_csv(&common.out_dir.join("eval_pg.csv"), &m)?;
            println!("R: {}", m.reward);
            println!("collisions: {}", m.collisions);
            println!("separation violations: {}", m.separations);
            println!("fallbacks: {}", m.fallbacks);
            for (k, p) in m.pg.iter().enumerate() {
                println!("P_g(threshold {k}): {p}");
            }
        }
        Command::Compare { common, seeds, modes, quiet } => {
            if seeds.is_empty() {
                bail!("at least one seed is required");
            }
            let config = common.config()?;
            let opts = TrainOptions { out_dir: Some(common.out_dir.clone()), verbose: !quiet };
            let report = harness::compare(&config, &modes, &seeds, &TraceSet::default(), &opts)?;
            print!("{}", report.summary());
        }
        Command::GenTraces { common, out, eval, index } => {
            let config = common.config()?;
            let stream = if eval { Stream::EvalTraces } else { Stream::TrainTraces };
            let traces = harness::generate_traces(&config, stream, index)?;
            let path = match out {
                Some(p) => p,
                None => {
                    std::fs::create_dir_all(&common.out_dir)?;
                    common.out_dir.join("traces.csv")
                }
            };
            save_traces(&path, &traces)?;
            println!("wrote {} traces of {} steps to {}", traces.len(), config.episode_len + 1, path.display());
        }
        Command::Coverage { common } => {
            let config = common.config()?;
            let r = harness::coverage_report(&config);
            println!("coverage radius: {:.3} m", r.coverage_radius);
            println!("per-agent covered area: {:.1} m^2", r.per_agent_area);
            println!("coverage fraction: {:.4}", r.fraction);
            println!("reference value: 0.12");
        }
    }
    Ok(())
}
