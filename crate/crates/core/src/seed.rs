//! Stateless seed derivation.
//!
//! Every random stream in the engine is seeded from a base seed mixed with
//! structural coordinates (replication, generation, chromosome content), so
//! results do not depend on evaluation order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type EngineRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds `parts` into `base`, order-sensitively.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(mix64(base ^ GOLDEN), |acc, &p| {
        mix64(acc.wrapping_add(GOLDEN) ^ mix64(p.wrapping_add(GOLDEN)))
    })
}

pub fn rng_from(base: u64, parts: &[u64]) -> EngineRng {
    EngineRng::seed_from_u64(derive_seed(base, parts))
}

/// Domain tags keep streams for different purposes apart.
pub(crate) mod tag {
    pub const SPLIT: u64 = 0x5350_4c49;
    pub const DISTANCE: u64 = 0x4449_5354;
    pub const HOLDOUT: u64 = 0x484f_4c44;
    pub const SUBORDINATE: u64 = 0x5355_4250;
    pub const GENERATION: u64 = 0x4745_4e52;
    pub const INIT: u64 = 0x494e_4954;
    pub const REPLACE: u64 = 0x5245_504c;
}
