//! Reproducible random streams.
//!
//! Every stochastic step draws from a [`ChaCha8Rng`] seeded through [`substream`], which
//! hashes a master seed together with a textual key (grid cell, instance id, permutation
//! index, ...). Two streams with different keys are independent, and adding a new key
//! never shifts the draws of an existing one, so parallel scheduling cannot change results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// The generator used throughout the crate.
pub type StreamRng = ChaCha8Rng;

/// Derives a 64-bit seed from `master` and an ordered list of key parts.
pub fn derive_seed(master: u64, parts: &[&str]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    for part in parts {
        // length prefix keeps ("ab", "c") and ("a", "bc") apart
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part.as_bytes());
    }
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// A generator for the stream identified by `(master, parts)`.
pub fn substream(master: u64, parts: &[&str]) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(master, parts))
}
