//! Prime-order group arithmetic over ristretto255, plus the two
//! hash-to-domain functions used throughout: `hash_to_group` maps byte
//! strings into the group, `hash_to_scalar` maps part lists into the scalar
//! field. Both apply distinct domain-separation tags and length-prefix their
//! inputs.

use curve25519_dalek::constants::RISTRETTO_BASEPOINT_POINT;
use curve25519_dalek::ristretto::{CompressedRistretto, RistrettoPoint};
use curve25519_dalek::traits::VartimeMultiscalarMul;
use rand::{CryptoRng, RngCore};
use sha2::{Digest as _, Sha512};

/// Identifier recorded in serialized artifacts so a future group swap cannot
/// be confused with this instantiation.
pub const GROUP_ID: &str = "ristretto255";
pub const GROUP_ID_BYTE: u8 = 0x01;

const DST_HASH_TO_GROUP: &[u8] = b"modelseal/v1/hash-to-group";
const DST_HASH_TO_SCALAR: &[u8] = b"modelseal/v1/hash-to-scalar";

/// An integer modulo the group order. Encoded as 32 little-endian bytes;
/// decoding rejects non-canonical (>= order) values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Scalar(pub(crate) curve25519_dalek::Scalar);

impl Scalar {
    pub const ZERO: Scalar = Scalar(curve25519_dalek::Scalar::ZERO);
    pub const ONE: Scalar = Scalar(curve25519_dalek::Scalar::ONE);

    /// Uniform nonzero scalar.
    pub fn random_nonzero<R: RngCore + CryptoRng>(rng: &mut R) -> Scalar {
        loop {
            let s = curve25519_dalek::Scalar::random(rng);
            if s != curve25519_dalek::Scalar::ZERO {
                return Scalar(s);
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.0 == curve25519_dalek::Scalar::ZERO
    }

    pub fn to_bytes(&self) -> [u8; 32] {
        self.0.to_bytes()
    }

    pub fn from_bytes(bytes: &[u8; 32]) -> Option<Scalar> {
        Option::<curve25519_dalek::Scalar>::from(
            curve25519_dalek::Scalar::from_canonical_bytes(*bytes),
        )
        .map(Scalar)
    }

    pub fn mul(&self, other: &Scalar) -> Scalar {
        Scalar(self.0 * other.0)
    }

    pub fn add(&self, other: &Scalar) -> Scalar {
        Scalar(self.0 + other.0)
    }

    pub fn sub(&self, other: &Scalar) -> Scalar {
        Scalar(self.0 - other.0)
    }

    pub fn neg(&self) -> Scalar {
        Scalar(-self.0)
    }
}

/// An element of the prime-order group. The compressed 32-byte encoding is
/// canonical: decode rejects anything re-encoding would not reproduce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupElement(pub(crate) RistrettoPoint);

impl GroupElement {
    /// The fixed generator g.
    pub fn generator() -> GroupElement {
        GroupElement(RISTRETTO_BASEPOINT_POINT)
    }

    /// g^s. Constant time in `s`.
    pub fn mul_base(s: &Scalar) -> GroupElement {
        GroupElement(RistrettoPoint::mul_base(&s.0))
    }

    /// self^s. Constant time in `s`.
    pub fn mul(&self, s: &Scalar) -> GroupElement {
        GroupElement(self.0 * s.0)
    }

    /// a·A + b·g, variable time. For verification equations over public data.
    pub fn vartime_mul_plus_base(a: &Scalar, point: &GroupElement, b: &Scalar) -> GroupElement {
        GroupElement(RistrettoPoint::vartime_double_scalar_mul_basepoint(
            &a.0, &point.0, &b.0,
        ))
    }

    /// a·A + b·B, variable time.
    pub fn vartime_double_mul(
        a: &Scalar,
        point_a: &GroupElement,
        b: &Scalar,
        point_b: &GroupElement,
    ) -> GroupElement {
        GroupElement(RistrettoPoint::vartime_multiscalar_mul(
            [&a.0, &b.0],
            [&point_a.0, &point_b.0],
        ))
    }

    pub fn to_bytes(&self) -> [u8; 32] {
        self.0.compress().to_bytes()
    }

    pub fn from_bytes(bytes: &[u8; 32]) -> Option<GroupElement> {
        CompressedRistretto(*bytes).decompress().map(GroupElement)
    }
}

/// H1: {0,1}* -> G. Uniform hash into the group via a 64-byte expansion.
pub fn hash_to_group(msg: &[u8]) -> GroupElement {
    let mut h = Sha512::new();
    h.update((DST_HASH_TO_GROUP.len() as u64).to_le_bytes());
    h.update(DST_HASH_TO_GROUP);
    h.update((msg.len() as u64).to_le_bytes());
    h.update(msg);
    let wide: [u8; 64] = h.finalize().into();
    GroupElement(RistrettoPoint::from_uniform_bytes(&wide))
}

/// H2: {0,1}* -> F_q, over a list of parts. Each part is length-prefixed, so
/// ("ab","c") and ("a","bc") hash differently.
pub fn hash_to_scalar(parts: &[&[u8]]) -> Scalar {
    hash_to_scalar_tagged(DST_HASH_TO_SCALAR, parts)
}

/// Scalar hash under a caller-chosen domain tag. Used for H2 and for
/// signature nonces/challenges, which must not share a domain.
pub(crate) fn hash_to_scalar_tagged(tag: &[u8], parts: &[&[u8]]) -> Scalar {
    let mut h = Sha512::new();
    h.update((tag.len() as u64).to_le_bytes());
    h.update(tag);
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    let wide: [u8; 64] = h.finalize().into();
    Scalar(curve25519_dalek::Scalar::from_bytes_mod_order_wide(&wide))
}
