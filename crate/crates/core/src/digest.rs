//! Hash primitives shared by every module: a 32-byte digest newtype, the two
//! supported algorithms, and tagged hashing with unambiguous framing.

use std::fmt;
use std::str::FromStr;

use blake2::digest::consts::U32;
use blake2::Blake2b;
use sha2::{Digest as _, Sha256};

type Blake2b256 = Blake2b<U32>;

/// Supported hash algorithms. Identifier bytes appear in binary
/// serializations; names appear in text records, JSON, and CLI flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum HashAlg {
    #[serde(rename = "sha256")]
    Sha256,
    #[serde(rename = "blake2b256")]
    Blake2b256,
}

impl HashAlg {
    pub fn id_byte(self) -> u8 {
        match self {
            HashAlg::Sha256 => 1,
            HashAlg::Blake2b256 => 2,
        }
    }

    pub fn from_id_byte(b: u8) -> Option<Self> {
        match b {
            1 => Some(HashAlg::Sha256),
            2 => Some(HashAlg::Blake2b256),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            HashAlg::Sha256 => "sha256",
            HashAlg::Blake2b256 => "blake2b256",
        }
    }
}

impl FromStr for HashAlg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sha256" => Ok(HashAlg::Sha256),
            "blake2b256" => Ok(HashAlg::Blake2b256),
            other => Err(format!("unknown hash algorithm: {other}")),
        }
    }
}

impl fmt::Display for HashAlg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A 32-byte hash output. Displayed and serialized as lowercase hex.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Digest(pub [u8; 32]);

impl Digest {
    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self, hex::FromHexError> {
        let v = hex::decode(s)?;
        let arr: [u8; 32] = v
            .try_into()
            .map_err(|_| hex::FromHexError::InvalidStringLength)?;
        Ok(Digest(arr))
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", self.to_hex())
    }
}

impl serde::Serialize for Digest {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> serde::Deserialize<'de> for Digest {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Digest::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

/// Incremental hasher over either algorithm.
pub enum Hasher {
    Sha256(Sha256),
    Blake2b256(Box<Blake2b256>),
}

impl Hasher {
    pub fn new(alg: HashAlg) -> Self {
        match alg {
            HashAlg::Sha256 => Hasher::Sha256(Sha256::new()),
            HashAlg::Blake2b256 => Hasher::Blake2b256(Box::new(Blake2b256::new())),
        }
    }

    pub fn update(&mut self, data: &[u8]) {
        match self {
            Hasher::Sha256(h) => h.update(data),
            Hasher::Blake2b256(h) => h.update(data),
        }
    }

    pub fn finalize(self) -> Digest {
        match self {
            Hasher::Sha256(h) => Digest(h.finalize().into()),
            Hasher::Blake2b256(h) => Digest(h.finalize().into()),
        }
    }
}

/// One-shot hash of a byte string.
pub fn hash_bytes(alg: HashAlg, data: &[u8]) -> Digest {
    let mut h = Hasher::new(alg);
    h.update(data);
    h.finalize()
}

/// SHA-256 over a domain tag and a part list. The tag and every part are
/// length-prefixed (u64 LE), so no two distinct (tag, parts) inputs produce
/// the same preimage.
pub fn sha256_tagged(tag: &[u8], parts: &[&[u8]]) -> Digest {
    let mut h = Sha256::new();
    h.update((tag.len() as u64).to_le_bytes());
    h.update(tag);
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    Digest(h.finalize().into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_input_vectors() {
        // Published test vectors for the empty string.
        assert_eq!(
            hash_bytes(HashAlg::Sha256, b"").to_hex(),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
        assert_eq!(
            hash_bytes(HashAlg::Blake2b256, b"").to_hex(),
            "0e5751c026e543b2e8ab2eb06099daa1d1e5df47778f7787faab45cdf12fe3a8"
        );
    }

    #[test]
    fn abc_vectors() {
        assert_eq!(
            hash_bytes(HashAlg::Sha256, b"abc").to_hex(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert_eq!(
            hash_bytes(HashAlg::Blake2b256, b"abc").to_hex(),
            "bddd813c634239723171ef3fee98579b94964e3bb1cb3e427262c8c068d52319"
        );
    }

    #[test]
    fn tagged_framing_separates_part_boundaries() {
        let a = sha256_tagged(b"t", &[b"ab", b"c"]);
        let b = sha256_tagged(b"t", &[b"a", b"bc"]);
        assert_ne!(a, b);
    }

    #[test]
    fn tagged_framing_separates_tag_from_parts() {
        let a = sha256_tagged(b"tx", &[b"y"]);
        let b = sha256_tagged(b"t", &[b"xy"]);
        assert_ne!(a, b);
    }

    #[test]
    fn digest_hex_round_trip() {
        let d = hash_bytes(HashAlg::Sha256, b"round trip");
        assert_eq!(Digest::from_hex(&d.to_hex()).unwrap(), d);
        assert!(Digest::from_hex("abcd").is_err());
    }
}
