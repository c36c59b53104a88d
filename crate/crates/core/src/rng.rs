//! Seed derivation for independent random streams.
//!
//! Every consumer of randomness (trace generation, placement, LoS draws,
//! exploration, minibatch sampling) gets its own ChaCha stream derived from
//! the run seed, a stream tag and an index, so adding draws to one stream
//! never perturbs another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Tags for the independent streams used by a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    TrainTraces = 1,
    EvalTraces = 2,
    TrainEpisode = 3,
    EvalEpisode = 4,
    Exploration = 5,
    Minibatch = 6,
    NetworkInit = 7,
    Rollout = 8,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, stream: Stream, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(stream as u64)) ^ index)
}

pub fn stream_rng(seed: u64, stream: Stream, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, stream, index))
}
