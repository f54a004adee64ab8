//! Keyed seed derivation.
//!
//! Every random decision in the lab is drawn from a generator seeded by a
//! pure function of `(base seed, key...)`, never from a shared stream. That
//! is what makes per-item work order-independent and safe to parallelize.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used throughout the crate. ChaCha output is stable across
/// platforms and crate versions, unlike `StdRng`.
pub type LabRng = ChaCha8Rng;

/// Stream tags so that independent consumers of one experiment seed never
/// collide.
pub mod stream {
    pub const SPLIT: u64 = 0x5350_4c49;
    pub const IMBALANCE: u64 = 0x494d_4241;
    pub const FIT: u64 = 0x4649_5400;
    pub const SCORE_RANDOM: u64 = 0x524e_4400;
    pub const AUGMENT: u64 = 0x4155_4700;
    pub const CURRICULUM: u64 = 0x4355_5200;
    pub const SYNTH_TRAIN: u64 = 0x5359_4e01;
    pub const SYNTH_TEST: u64 = 0x5359_4e02;
    pub const SYNTH_OD: u64 = 0x5359_4e03;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `keys` into `base`. Different key sequences give unrelated seeds.
pub fn derive_seed(base: u64, keys: &[u64]) -> u64 {
    keys.iter()
        .fold(splitmix64(base), |acc, &k| splitmix64(acc ^ splitmix64(k)))
}

pub fn rng_from(base: u64, keys: &[u64]) -> LabRng {
    LabRng::seed_from_u64(derive_seed(base, keys))
}
