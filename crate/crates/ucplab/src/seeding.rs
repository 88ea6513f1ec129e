//! Deterministic RNG plumbing.
//!
//! One root seed per run; per-task seeds are derived with splitmix64 applied
//! to `root + GOLDEN * (index + 1)`. The scheme is recorded in CSV headers so
//! runs can be reproduced bit for bit regardless of worker count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Deterministic ChaCha8 stream for a seed.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// splitmix64 finalizer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for subtask `index` of a run with the given root seed.
pub fn derive_seed(root: u64, index: u64) -> u64 {
    splitmix64(root.wrapping_add(GOLDEN.wrapping_mul(index.wrapping_add(1))))
}

/// Human-readable description of the derivation scheme, for output headers.
pub fn scheme_description() -> &'static str {
    "per-task seed = splitmix64(root + 0x9E3779B97F4A7C15 * (task_index + 1))"
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn derived_seeds_distinct_and_stable() {
        let s0 = derive_seed(42, 0);
        let s1 = derive_seed(42, 1);
        assert_ne!(s0, s1);
        assert_eq!(s0, derive_seed(42, 0));
    }

    #[test]
    fn rng_deterministic() {
        let a: f64 = seeded_rng(7).random();
        let b: f64 = seeded_rng(7).random();
        assert_eq!(a, b);
    }
}
