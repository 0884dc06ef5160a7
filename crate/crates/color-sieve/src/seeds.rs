//! Named seed substreams.
//!
//! All randomness in a run flows from one root seed. Each consumer (subset
//! sampling, DSIR Gumbel noise, synthetic generation, ...) derives its own
//! substream by name, so stages are independently reproducible and adding a
//! consumer never perturbs the draws of another.

use sha2::{Digest, Sha256};

/// Derives a child seed from `(root, name)`. Stable across platforms.
pub fn substream(root: u64, name: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(root.to_le_bytes());
    h.update(name.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}
