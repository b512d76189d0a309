//! Seed derivation. Every random stream in the crate is a ChaCha8 generator
//! keyed by a seed derived from the user seed and a fixed path of stream tags,
//! so adding or removing one consumer never shifts another consumer's stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub const STREAM_INIT: u64 = 0x1;
pub const STREAM_EPOCH: u64 = 0x2;
pub const STREAM_LABELS: u64 = 0x10;
pub const STREAM_ROTATION: u64 = 0x11;
pub const STREAM_SAMPLES: u64 = 0x12;
pub const STREAM_FOLDS: u64 = 0x20;
pub const STREAM_ARM: u64 = 0x21;
pub const STREAM_CLASSIFIER: u64 = 0x22;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from `base` and a path of tags.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(base), |acc, &tag| splitmix64(acc ^ splitmix64(tag)))
}

pub fn rng_from(base: u64, path: &[u64]) -> Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, path))
}
