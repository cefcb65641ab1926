//! Stable seed derivation.
//!
//! Per-item seeds depend only on the base seed and the item's identity, so
//! they survive reordering and subsetting of a dataset.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Seed for `label` under `base`.
pub fn derive(base: u64, label: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(base.to_le_bytes());
    hasher.update(label.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

/// Seed for a pair of labels, e.g. a sample id within a named bucket.
pub fn derive2(base: u64, a: &str, b: &str) -> u64 {
    derive(derive(base, a), b)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
