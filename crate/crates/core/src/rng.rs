//! Seeded randomness. Every random stream in the crate is a ChaCha8 generator
//! keyed by a 64-bit seed derived from the run seed plus a purpose tag, so
//! results never depend on scheduling or call order across clients.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent sub-seed from `seed` and a sequence of tags.
pub fn derive(seed: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(mix(seed), |acc, &t| mix(acc ^ mix(t)))
}

pub fn rng(seed: u64, tags: &[u64]) -> Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, tags))
}

/// Purpose tags for [`derive`].
pub mod tag {
    pub const GNN_INIT: u64 = 1;
    pub const ENCODER_INIT: u64 = 2;
    pub const SPLIT: u64 = 3;
    pub const LOUVAIN: u64 = 4;
    pub const GENERATOR: u64 = 5;
    pub const TRIAL: u64 = 6;
}
