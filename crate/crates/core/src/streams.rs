//! Deterministic derivation of per-subsystem RNG streams from one global
//! seed, so concurrent work items can draw randomness without sharing a
//! generator (and without the schedule affecting results).

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const TAG_PROBING: u64 = 0x01;
pub const TAG_KMEANS: u64 = 0x02;
pub const TAG_FOREST: u64 = 0x03;
pub const TAG_COMBINATION: u64 = 0x04;
pub const TAG_PILOT: u64 = 0x05;
pub const TAG_SYNTHETIC: u64 = 0x06;

/// splitmix64 finalizer; bijective on u64.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed for (subsystem `tag`, work item `index`).
pub fn derive(seed: u64, tag: u64, index: u64) -> u64 {
    mix(mix(seed ^ mix(tag)) ^ index)
}

/// A self-contained generator for one work item.
pub fn stream(seed: u64, tag: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, tag, index))
}
