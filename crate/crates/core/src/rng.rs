//! Seed derivation for independent, order-free random streams.
//!
//! Every worker (record generator, rollout episode, eval instance) gets its own
//! `ChaCha8Rng` seeded from the master seed plus a path of integer labels, so
//! results never depend on scheduling or iteration order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Concrete RNG type used across the crate.
pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a master seed with a path of labels into a new seed.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// A fresh stream for the given label path.
pub fn stream(master: u64, path: &[u64]) -> Rng {
    Rng::seed_from_u64(derive_seed(master, path))
}

/// 64-bit FNV-1a with a seed folded into the offset basis.
pub fn fnv1a64(bytes: &[u8], seed: u64) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ splitmix64(seed);
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Stable hash of a word sequence (used to key deterministic draws on content).
pub fn hash_words<S: AsRef<str>>(words: &[S], seed: u64) -> u64 {
    let mut h = splitmix64(seed);
    for w in words {
        h = splitmix64(h ^ fnv1a64(w.as_ref().as_bytes(), 0x5eed));
    }
    h
}

/// Maps a hash to a uniform draw in [0, 1).
pub fn unit_from_hash(h: u64) -> f64 {
    (splitmix64(h) >> 11) as f64 / (1u64 << 53) as f64
}

// Labels for stream paths, so call sites do not collide by accident.
pub mod label {
    pub const DATASET: u64 = 1;
    pub const PREDICT: u64 = 2;
    pub const REFINE: u64 = 3;
    pub const ROLLOUT: u64 = 4;
    pub const INIT: u64 = 5;
    pub const SHUFFLE: u64 = 6;
    pub const DEV: u64 = 7;
    pub const INSTANCE: u64 = 8;
    pub const CRITIQUE: u64 = 9;
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = stream(7, &[1, 2]).random();
        let b: u64 = stream(7, &[1, 2]).random();
        let c: u64 = stream(7, &[2, 1]).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn unit_draw_in_range() {
        for i in 0..1000 {
            let u = unit_from_hash(i);
            assert!((0.0..1.0).contains(&u));
        }
    }
}
