//! Seed handling.
//!
//! Every random stream in the crate is a `ChaCha8Rng` seeded through
//! `SeedableRng::seed_from_u64`. Sub-seeds are derived from a master seed by
//! mixing it with the FNV-1a hash of a component name through SplitMix64, so
//! adding a component never perturbs the streams of the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xCBF2_9CE4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// Sub-seed for `component` under `master`.
pub fn derive_seed(master: u64, component: &str) -> u64 {
    splitmix64(master ^ fnv1a64(component.as_bytes()))
}

pub fn stream(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream addressed by `(seed, index, step)`; evaluation order
/// does not matter.
pub fn indexed_stream(seed: u64, index: u64, step: u64) -> ChaCha8Rng {
    let key = splitmix64(splitmix64(seed) ^ splitmix64(index.wrapping_mul(4).wrapping_add(step)));
    ChaCha8Rng::seed_from_u64(key)
}
