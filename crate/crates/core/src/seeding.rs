//! Deterministic derivation of random streams.
//!
//! Every random draw in the crate comes from a ChaCha12 stream keyed by
//! `(root seed, label, index)` through SHA-256. Streams for different labels or
//! indices are independent for all practical purposes, replicates can be
//! generated in parallel in any order, and identical inputs reproduce identical
//! draws on every platform.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};

/// Domain-separation prefix so stream keys cannot collide with other digests.
const STREAM_DOMAIN: &[u8] = b"qclt.stream.v1";

/// Derive the ChaCha12 stream for `(seed, label, index)`.
///
/// `label` names the consumer (for example `"process.stationary"` or
/// `"quenched.replicate"`), `index` is typically a replicate number.
pub fn derive_rng(seed: u64, label: &str, index: u64) -> ChaCha12Rng {
    let mut hasher = Sha256::new();
    hasher.update(STREAM_DOMAIN);
    hasher.update(seed.to_le_bytes());
    hasher.update((label.len() as u64).to_le_bytes());
    hasher.update(label.as_bytes());
    hasher.update(index.to_le_bytes());
    let digest: [u8; 32] = hasher.finalize().into();
    ChaCha12Rng::from_seed(digest)
}

/// Derive a child seed for `(seed, label, index)`.
///
/// Useful when a sub-experiment needs its own root seed that can be recorded
/// and replayed on its own (for example one stream key per replicate).
pub fn derive_seed(seed: u64, label: &str, index: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(STREAM_DOMAIN);
    hasher.update(b"child");
    hasher.update(seed.to_le_bytes());
    hasher.update((label.len() as u64).to_le_bytes());
    hasher.update(label.as_bytes());
    hasher.update(index.to_le_bytes());
    let digest: [u8; 32] = hasher.finalize().into();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has at least 8 bytes"))
}

/// SHA-256 of a canonical text serialization, as lowercase hex.
pub fn digest_hex(text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        use std::fmt::Write;
        write!(out, "{byte:02x}").expect("writing to a String cannot fail");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn identical_inputs_reproduce_the_stream() {
        let mut a = derive_rng(42, "unit.test", 7);
        let mut b = derive_rng(42, "unit.test", 7);
        for _ in 0..32 {
            assert_eq!(a.gen::<u64>(), b.gen::<u64>());
        }
    }

    #[test]
    fn label_and_index_separate_streams() {
        let mut base = derive_rng(42, "unit.test", 0);
        let mut other_label = derive_rng(42, "unit.test2", 0);
        let mut other_index = derive_rng(42, "unit.test", 1);
        let x: u64 = base.gen();
        assert_ne!(x, other_label.gen::<u64>());
        // Fresh stream: compare against the first draw of the index-1 stream.
        assert_ne!(x, other_index.gen::<u64>());
    }

    #[test]
    fn child_seeds_are_stable_and_distinct() {
        let a = derive_seed(42, "replicate", 0);
        assert_eq!(a, derive_seed(42, "replicate", 0));
        assert_ne!(a, derive_seed(42, "replicate", 1));
        assert_ne!(a, derive_seed(43, "replicate", 0));
        assert_ne!(a, derive_seed(42, "origin", 0));
    }

    #[test]
    fn digest_is_stable() {
        // Pinned so serialized spec hashes stay comparable across versions.
        assert_eq!(
            digest_hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
