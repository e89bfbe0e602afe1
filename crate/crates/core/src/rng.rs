//! Seeded random number generation.
//!
//! Every stochastic routine takes a `&mut impl Rng`. Experiments derive one
//! [`ChaCha8Rng`] stream per run from a master seed so that runs can be added,
//! reordered or executed in parallel without changing each other's output.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng as SparjRng;

/// Stateless 64-bit mixer (splitmix64 finalizer).
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable child seed for stream `index` under `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    mix64(mix64(master) ^ index.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

/// Stable child seed for a named purpose ("data", "chain", ...) of run `index`.
pub fn derive_labeled_seed(master: u64, index: u64, label: &str) -> u64 {
    let tag = label.bytes().fold(0xCBF2_9CE4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x100_0000_01B3)
    });
    derive_seed(derive_seed(master, index), tag)
}

pub fn rng_from_seed(seed: u64) -> SparjRng {
    SparjRng::seed_from_u64(seed)
}
