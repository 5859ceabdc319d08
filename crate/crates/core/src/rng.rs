//! Named, reproducible random streams.
//!
//! Every source of randomness in the crate is a ChaCha stream keyed by
//! (seed, purpose, indices) through SHA-256, so results are reproducible
//! regardless of evaluation order or parallel scheduling: each (purpose,
//! epoch, chunk) triple owns an independent stream.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Derive a reproducible RNG stream from a base seed, a purpose label, and
/// integer indices (e.g. epoch, chunk).
pub fn stream(seed: u64, purpose: &str, indices: &[u64]) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update([0xff]);
    hasher.update(purpose.as_bytes());
    hasher.update([0xff]);
    for ix in indices {
        hasher.update(ix.to_le_bytes());
    }
    let digest = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(key)
}
