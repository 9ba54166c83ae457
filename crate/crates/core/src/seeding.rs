//! Per-trial random streams.
//!
//! Trial `ordinal` under master seed `s` draws from ChaCha20 keyed with the
//! 32 bytes
//!
//! ```text
//! s (u64, little endian) || ordinal (u64, little endian) || b"witnesskit-trial"
//! ```
//!
//! with nonce and block counter starting at zero. Each trial's stream depends
//! only on `(s, ordinal)`, so trials can run in any order or on any thread.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

const DOMAIN_TAG: &[u8; 16] = b"witnesskit-trial";

/// Human-readable statement of the derivation, echoed into reports.
pub const DERIVATION_RULE: &str =
    "chacha20(key = le64(master_seed) || le64(trial_ordinal) || \"witnesskit-trial\", nonce = 0)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TrialSeed {
    pub master: u64,
    pub ordinal: u64,
}

impl TrialSeed {
    pub fn new(master: u64, ordinal: u64) -> Self {
        Self { master, ordinal }
    }

    pub fn key(&self) -> [u8; 32] {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.master.to_le_bytes());
        key[8..16].copy_from_slice(&self.ordinal.to_le_bytes());
        key[16..].copy_from_slice(DOMAIN_TAG);
        key
    }

    pub fn rng(&self) -> ChaCha20Rng {
        ChaCha20Rng::from_seed(self.key())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn streams_depend_only_on_master_and_ordinal() {
        let a = TrialSeed::new(42, 7).rng().next_u64();
        let b = TrialSeed::new(42, 7).rng().next_u64();
        let c = TrialSeed::new(42, 8).rng().next_u64();
        let d = TrialSeed::new(43, 7).rng().next_u64();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn key_layout() {
        let key = TrialSeed::new(1, 2).key();
        assert_eq!(key[0], 1);
        assert_eq!(key[8], 2);
        assert_eq!(&key[16..], b"witnesskit-trial");
    }

    #[test]
    fn first_output_is_pinned() {
        // guards against silent changes in the stream construction
        let first = TrialSeed::new(0, 0).rng().next_u64();
        assert_eq!(first, PINNED_FIRST_OUTPUT);
    }

    // first 8 keystream bytes of standard ChaCha20 under key(0, 0), computed independently
    const PINNED_FIRST_OUTPUT: u64 = 10_558_204_350_176_263_355;
}
