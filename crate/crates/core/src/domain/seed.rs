//! Deterministic seed derivation.
//!
//! A child seed is `splitmix64(splitmix64(parent) ^ splitmix64(fnv1a64(label)) ^ (index + 1))`.
//! Every step is a fixed 64-bit integer function, so the same
//! `(global seed, path)` produces the same stream on every platform. Child
//! streams are ChaCha8 seeded from the derived 64-bit value.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a over the UTF-8 bytes of `s`.
pub fn fnv1a64(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// A seed together with the derivation path that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    /// The 64-bit seed of this node.
    pub global: u64,
    /// Labels and indices walked from the root seed.
    pub path: Vec<(String, u64)>,
}

impl SeedSpec {
    pub fn root(global: u64) -> Self {
        Self {
            global,
            path: Vec::new(),
        }
    }

    pub fn derive(&self, label: &str, index: u64) -> Self {
        let mixed = splitmix64(self.global)
            ^ splitmix64(fnv1a64(label))
            ^ index.wrapping_add(1);
        let mut path = self.path.clone();
        path.push((label.to_owned(), index));
        Self {
            global: splitmix64(mixed),
            path,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.global)
    }
}
