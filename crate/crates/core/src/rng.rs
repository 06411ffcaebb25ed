//! Seeded random streams.
//!
//! Parallel work never shares a generator. Each task derives its own stream
//! from the user seed plus a tuple of task coordinates (class id, tree index,
//! fold, ...), so output is identical for any worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mix a base seed with task coordinates into a new 64-bit seed.
pub fn derive_seed(seed: u64, coords: &[u64]) -> u64 {
    coords
        .iter()
        .fold(splitmix(seed), |acc, &c| splitmix(acc ^ splitmix(c)))
}

pub fn stream(seed: u64, coords: &[u64]) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, coords))
}
