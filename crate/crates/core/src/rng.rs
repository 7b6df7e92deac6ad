//! Keyed deterministic random streams.
//!
//! Every random decision draws from a generator seeded by hashing the run
//! seed together with a stable key, so results do not depend on evaluation
//! order or worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub fn keyed_rng(seed: u64, parts: &[&str]) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    for part in parts {
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part.as_bytes());
    }
    ChaCha8Rng::from_seed(hasher.finalize().into())
}

pub fn indexed_rng(seed: u64, domain: &str, index: u64) -> ChaCha8Rng {
    keyed_rng(seed, &[domain, &index.to_string()])
}
