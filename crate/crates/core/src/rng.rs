//! Seeded randomness. Every stochastic step in the crate draws from
//! [`ModelRng`] so results are reproducible from a single `u64`.

use rand::SeedableRng;

pub type ModelRng = rand_chacha::ChaCha8Rng;

pub fn seeded(seed: u64) -> ModelRng {
    ModelRng::seed_from_u64(seed)
}

/// Mixes a base seed with a stream index (SplitMix64 finaliser), giving
/// independent seeds for jobs that may run in any order.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
