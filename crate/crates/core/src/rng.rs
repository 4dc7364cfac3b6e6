//! Per-item random streams.
//!
//! Every stream is seeded from SHA-256 of `master_seed` (little-endian
//! bytes) followed by the UTF-8 item key, and drives a ChaCha8 generator.
//! Streams therefore depend only on `(master_seed, item_key)`, never on the
//! order in which workers pick items up.
//!
//! Draw primitives consume exactly one 64-bit word each, so the number of
//! words a transform uses is fixed and part of its contract.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use sha2::{Digest, Sha256};

#[derive(Clone, Debug)]
pub struct RandomStream {
    rng: ChaCha8Rng,
}

pub fn derive_stream(master_seed: u64, item_key: &str) -> RandomStream {
    let mut hasher = Sha256::new();
    hasher.update(master_seed.to_le_bytes());
    hasher.update(item_key.as_bytes());
    let seed: [u8; 32] = hasher.finalize().into();
    RandomStream {
        rng: ChaCha8Rng::from_seed(seed),
    }
}

impl RandomStream {
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, n)` by multiply-shift; `n` must be nonzero.
    /// The bias is below `n / 2^64`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "empty range");
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }
}
