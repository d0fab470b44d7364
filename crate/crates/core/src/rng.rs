//! Seed derivation. Every stochastic component draws from a ChaCha8 stream
//! keyed by `(master seed, role, indices...)`, so results never depend on
//! evaluation order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

/// Stream tags; the values are arbitrary but fixed forever.
pub mod stream {
    pub const GENERATOR: u64 = 0x01;
    pub const WORLD: u64 = 0x02;
    pub const DATASET: u64 = 0x03;
    pub const SPLIT: u64 = 0x04;
    pub const PREDICTOR: u64 = 0x05;
    pub const DISCRIMINATOR: u64 = 0x06;
    pub const SHUFFLE: u64 = 0x07;
    pub const GA: u64 = 0x08;
    pub const GD: u64 = 0x09;
    pub const CLASSIFIER: u64 = 0x0a;
    pub const BENCHMARK: u64 = 0x0b;
    pub const SWEEP: u64 = 0x0c;
    pub const ALBUM: u64 = 0x0d;
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(splitmix64(master), |acc, &p| {
        splitmix64(acc ^ splitmix64(p))
    })
}

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn derived(master: u64, parts: &[u64]) -> SeededRng {
    seeded(derive_seed(master, parts))
}
