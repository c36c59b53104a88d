//! File formats, the training and evaluation harness, and the `uabs` CLI
//! built on `uabs-core`.

pub mod checkpoint;
pub mod config_io;
mod error;
pub mod harness;
pub mod shared_replay;
pub mod traces;

pub use error::{SimError, SimResult};
