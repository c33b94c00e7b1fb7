//! Schnorr signatures over the repo group with deterministic nonces.
//! Used for identity tokens, certificates, model signatures, and log
//! checkpoints. The algorithm identifier travels with every bundle.

use rand::{CryptoRng, RngCore};
use thiserror::Error;

use crate::group::{hash_to_scalar_tagged, GroupElement, Scalar};

pub const SIG_ALG_ID: &str = "schnorr-ristretto255-sha512";

const TAG_NONCE: &[u8] = b"modelseal/v1/schnorr-nonce";
const TAG_CHALLENGE: &[u8] = b"modelseal/v1/schnorr-challenge";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SchnorrError {
    #[error("malformed signature encoding: {0}")]
    Malformed(&'static str),
}

#[derive(Debug, Clone)]
pub struct SigningKey {
    sk: Scalar,
    pk: GroupElement,
}

impl SigningKey {
    pub fn generate<R: RngCore + CryptoRng>(rng: &mut R) -> SigningKey {
        let sk = Scalar::random_nonzero(rng);
        SigningKey { sk, pk: GroupElement::mul_base(&sk) }
    }

    pub fn from_secret_bytes(bytes: &[u8; 32]) -> Option<SigningKey> {
        let sk = Scalar::from_bytes(bytes)?;
        if sk.is_zero() {
            return None;
        }
        Some(SigningKey { sk, pk: GroupElement::mul_base(&sk) })
    }

    pub fn secret_bytes(&self) -> [u8; 32] {
        self.sk.to_bytes()
    }

    pub fn public(&self) -> &GroupElement {
        &self.pk
    }

    /// Nonce k = H(tag, sk, msg); R = g^k; c = H(tag, R, pk, msg); s = k + c*sk.
    pub fn sign(&self, msg: &[u8]) -> Signature {
        let k = hash_to_scalar_tagged(TAG_NONCE, &[&self.sk.to_bytes(), msg]);
        let r = GroupElement::mul_base(&k);
        let c = hash_to_scalar_tagged(TAG_CHALLENGE, &[&r.to_bytes(), &self.pk.to_bytes(), msg]);
        let s = k.add(&c.mul(&self.sk));
        Signature { r, s }
    }
}

/// (R, s) with R = g^k. Serialized as R || s (64 bytes).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Signature {
    r: GroupElement,
    s: Scalar,
}

impl Signature {
    pub fn to_bytes(&self) -> [u8; 64] {
        let mut out = [0u8; 64];
        out[..32].copy_from_slice(&self.r.to_bytes());
        out[32..].copy_from_slice(&self.s.to_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8; 64]) -> Result<Signature, SchnorrError> {
        let r = GroupElement::from_bytes(bytes[..32].try_into().unwrap())
            .ok_or(SchnorrError::Malformed("R is not a canonical group element"))?;
        let s = Scalar::from_bytes(bytes[32..].try_into().unwrap())
            .ok_or(SchnorrError::Malformed("s is not a canonical scalar"))?;
        Ok(Signature { r, s })
    }
}

/// Accepts iff g^s = R + c*pk for c = H(tag, R, pk, msg).
pub fn verify(pk: &GroupElement, msg: &[u8], sig: &Signature) -> bool {
    let c = hash_to_scalar_tagged(TAG_CHALLENGE, &[&sig.r.to_bytes(), &pk.to_bytes(), msg]);
    // R' = s*g - c*pk must equal R.
    let r_prime = GroupElement::vartime_mul_plus_base(&c.neg(), pk, &sig.s);
    r_prime == sig.r
}
