//! Stable seed derivation. Per-scan RNG streams depend only on the global seed and the
//! names involved, never on worker scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type ScanRng = ChaCha8Rng;

/// SHA-256 over `global_seed` (little-endian) followed by each part and a NUL separator;
/// the first eight digest bytes, little-endian.
pub fn derive_seed(global_seed: u64, parts: &[&str]) -> u64 {
    let mut h = Sha256::new();
    h.update(global_seed.to_le_bytes());
    for p in parts {
        h.update(p.as_bytes());
        h.update([0u8]);
    }
    let digest = h.finalize();
    let mut first = [0u8; 8];
    first.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(first)
}

pub fn rng(seed: u64) -> ScanRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `round(fraction * n)` with halves rounded up.
pub fn round_count(fraction: f64, n: usize) -> usize {
    (fraction * n as f64 + 0.5).floor() as usize
}
