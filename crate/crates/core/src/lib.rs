//! Simulation core for UAV base stations (UABS) serving vehicular ground
//! users (GUEs).
//!
//! Everything in this crate is pure computation over `alloc` collections:
//! the mmWave link model, per-user service tracking, the multi-agent
//! environment, the three anti-collision mechanisms and a shared-policy
//! dueling double DQN. File formats, the CLI and the experiment harness live
//! in the `uabs-sim` companion crate.

#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod channel;
pub mod config;
pub mod env;
mod error;
pub mod learn;
mod math;
pub mod rng;
pub mod safety;
pub mod scenario;
pub mod service;

pub use config::{LearnerConfig, LosMode, SafetyMode, SimConfig};
pub use env::{Action, Env, Observation, SafetyEvent, StepOutcome};
pub use error::{Error, Result};
pub use scenario::{GueTrace, Position};
