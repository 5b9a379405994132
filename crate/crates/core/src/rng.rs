//! Seed derivation. Every run gets its own seed `derive_seed(master, run_index)`,
//! and each run splits into independent ChaCha streams so that, for example,
//! population draws never shift the message sequence.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent substreams of one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Population = 0,
    Messages = 1,
    Baseline = 2,
    Noise = 3,
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of run `run_index` under `master`. Independent of execution order.
pub fn derive_seed(master: u64, run_index: u64) -> u64 {
    mix(mix(master) ^ run_index.wrapping_mul(0xd6e8_feb8_6659_fd93))
}

pub fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}
