//! Randomness streams derived from one master seed.
//!
//! Stream `(label, index)` is a ChaCha20 generator keyed with
//! `SHA-256(master_le64 ‖ label_utf8 ‖ index_le64)`. Every random choice in
//! the harness goes through a named stream, so results do not depend on
//! thread count or scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

pub fn derive_seed(master: u64, label: &str, index: u64) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update(label.as_bytes());
    hasher.update(index.to_le_bytes());
    hasher.finalize().into()
}

pub fn stream(master: u64, label: &str, index: u64) -> ChaCha20Rng {
    ChaCha20Rng::from_seed(derive_seed(master, label, index))
}
