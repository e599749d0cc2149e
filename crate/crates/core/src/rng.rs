//! Keyed random streams.
//!
//! Every stochastic quantity is drawn from a ChaCha generator whose key is
//! derived from `(master seed, purpose, index)`. Work items therefore never
//! share generator state, and results do not depend on how items are
//! scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a derived stream is used for. Distinct purposes give independent
/// streams even for identical seeds and indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    Disorder = 1,
    CavityFields = 2,
    BlockDisorderA = 3,
    BlockDisorderB = 4,
    DirectionsA = 5,
    DirectionsB = 6,
    Restart = 7,
    SubsystemA = 8,
    SubsystemB = 9,
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn mix64(mut x: u64) -> u64 {
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Derives a child seed from a parent seed and a sequence of words.
pub fn derive_seed(parent: u64, words: &[u64]) -> u64 {
    words.iter().fold(mix64(parent ^ GOLDEN), |acc, &w| {
        mix64(acc.wrapping_add(GOLDEN).wrapping_add(mix64(w)))
    })
}

/// Seed of the `index`-th item of a purpose-tagged stream.
pub fn stream_seed(seed: u64, purpose: Purpose, index: u64) -> u64 {
    derive_seed(seed, &[purpose as u64, index])
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stream_rng(seed: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    rng_from_seed(stream_seed(seed, purpose, index))
}
