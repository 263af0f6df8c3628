//! Stage tags mixed into the experiment seed.

use minority_core::rng::derive_seed;

pub const DATASET: u64 = 1;
pub const REFERENCE: u64 = 2;
pub const SCORE_NET: u64 = 3;
pub const MINORITY: u64 = 4;
pub const CLASSIFIER: u64 = 5;
pub const SAMPLE: u64 = 6;
pub const FEATURE: u64 = 7;

pub fn stage(seed: u64, tag: u64) -> u64 {
    derive_seed(seed, tag)
}
