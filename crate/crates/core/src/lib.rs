//! Supply-chain transparency toolkit for ML artifacts.
//!
//! Two workflows share this crate:
//!
//! * **Model signing**: deterministic hashing of model files and directories
//!   ([`model_hash`]), ephemeral-key signing with identity-bound certificates
//!   ([`signing`]), and a local append-only transparency log that issues
//!   inclusion and consistency proofs ([`translog`]). Verification is fully
//!   offline given a bundle and trust roots.
//! * **Dataset commitments**: a zero-knowledge set ([`zks`]) built from a VRF
//!   ([`vrf`]) and a Patricia-Merkle accumulator ([`accumulator`]), committing
//!   to a set of training-data elements so that membership and non-membership
//!   can be proven later without revealing anything else about the set beyond
//!   its size.
//!
//! All group arithmetic is over ristretto255 ([`group`]); every serialized
//! artifact embeds group/hash identifiers so the instantiation can change
//! without silent cross-version confusion.
//!
//! The `parallel` feature (default) enables data-parallel chunk hashing and
//! commit construction via rayon. Every parallel entry point has an
//! always-compiled `*_sequential` twin that produces byte-identical output.

pub mod accumulator;
pub mod bench;
pub mod codec;
pub mod digest;
pub mod group;
pub mod model_hash;
pub mod schnorr;
pub mod signing;
pub mod translog;
pub mod vrf;
pub mod zks;

use std::sync::atomic::{AtomicU64, Ordering};

/// Counts operations that would hit a network service in a real deployment
/// (identity-token issuance, certificate issuance, log appends). Verification
/// paths must leave this untouched; tests assert on it.
static SERVICE_OPS: AtomicU64 = AtomicU64::new(0);

pub(crate) fn bump_service_ops() {
    SERVICE_OPS.fetch_add(1, Ordering::Relaxed);
}

/// Total emulated online-service operations performed by this process.
pub fn service_ops() -> u64 {
    SERVICE_OPS.load(Ordering::Relaxed)
}
