//! Zero-knowledge set commitment over the VRF and the accumulator.
//!
//! Commit: generate a VRF keypair; for each element D_i draw fresh lambda-bit
//! randomness r_i, place the blinded value H(D_i || r_i) at trie key
//! H(VRF.Eval(sk, D_i)), and commit the accumulator over the resulting map.
//! Publishing (pk, root, n) reveals the set size and nothing else: keys are
//! pseudorandom without sk, values are hiding commitments.
//!
//! Query: the prover returns the VRF output y with its proof, plus an
//! accumulator (non-)inclusion proof at key H(y); member responses carry the
//! opening r so the verifier can bind the leaf value to the queried D.

use std::collections::HashMap;

use rand::{CryptoRng, RngCore};
use thiserror::Error;

use crate::accumulator::{
    self, InclusionProof, NonInclusionProof, TrieCommitment, TrieError, TrieKey, TrieState,
};
use crate::codec::{CodecError, Reader, Writer};
use crate::digest::{sha256_tagged, Digest, HashAlg};
use crate::group::{GroupElement, Scalar, GROUP_ID, GROUP_ID_BYTE};
use crate::vrf::{self, VrfKeypair, VrfProof};

const TAG_KEY: &[u8] = b"modelseal/v1/zks-key";
const TAG_VALUE: &[u8] = b"modelseal/v1/zks-value";

/// Minimum blinding width. Narrower randomness would let a brute-force
/// search open the leaf commitments.
pub const MIN_LAMBDA_BITS: u32 = 128;
pub const DEFAULT_LAMBDA_BITS: u32 = 128;

const FORMAT_VERSION: u8 = 1;
const TYPE_QUERY_PROOF: u8 = 3;
const TYPE_STATE: u8 = 4;

pub const COMMITMENT_HEADER: &str = "modelseal-zks-commitment/v1";

#[derive(Debug, Error)]
pub enum ZksError {
    #[error("lambda must be a multiple of 8 and at least {MIN_LAMBDA_BITS} bits")]
    LambdaTooSmall,
    #[error("duplicate element: index {second} repeats index {first}")]
    DuplicateElement { first: usize, second: usize },
    #[error("vrf outputs collided on a trie key; regenerate the keypair")]
    KeyCollision,
    #[error("secret key must be nonzero")]
    BadSecretKey,
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Trie(#[from] TrieError),
    #[error("malformed encoding: {0}")]
    Malformed(&'static str),
}

/// Trie key for a VRF output: H(y).
pub fn key_for_vrf_output(y: &GroupElement) -> TrieKey {
    TrieKey::from_digest(&sha256_tagged(TAG_KEY, &[&y.to_bytes()]))
}

/// Blinded leaf value: H(D || r), hiding under the random-oracle model.
pub fn leaf_value(element: &[u8], r: &[u8]) -> Digest {
    sha256_tagged(TAG_VALUE, &[element, r])
}

struct ZksEntry {
    element: Vec<u8>,
    r: Vec<u8>,
    key: TrieKey,
}

/// Prover state: the VRF secret, the blinded entries, and the built trie.
/// Contains key material; treat a serialized state file as a secret.
pub struct ZksState {
    keypair: VrfKeypair,
    lambda_bits: u32,
    entries: Vec<ZksEntry>,
    by_element: HashMap<Vec<u8>, usize>,
    trie: TrieState,
}

/// The public commitment: VRF public key plus accumulator root and size.
/// The declared leakage is exactly n.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZksCommitment {
    pub pk: GroupElement,
    pub com: TrieCommitment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZksResponse {
    Member,
    NonMember,
}

impl ZksResponse {
    pub fn as_bit(self) -> u8 {
        match self {
            ZksResponse::Member => 1,
            ZksResponse::NonMember => 0,
        }
    }

    pub fn from_bit(b: u8) -> Option<ZksResponse> {
        match b {
            1 => Some(ZksResponse::Member),
            0 => Some(ZksResponse::NonMember),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ZksAccProof {
    Inclusion(InclusionProof),
    NonInclusion(NonInclusionProof),
}

/// Everything the verifier needs beyond (commitment, D, resp): the VRF
/// output and proof, the accumulator proof at H(y), and the blinding opening
/// for member responses. Non-member proofs carry no openings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZksQueryProof {
    pub y: GroupElement,
    pub vrf_proof: VrfProof,
    pub acc: ZksAccProof,
    pub opening: Option<Vec<u8>>,
}

/// Commits to `elements`. Duplicates are reported by index so logs do not
/// echo element content.
pub fn commit<R: RngCore + CryptoRng>(
    elements: &[Vec<u8>],
    lambda_bits: u32,
    rng: &mut R,
) -> Result<(ZksState, ZksCommitment), ZksError> {
    commit_inner(elements, lambda_bits, rng, cfg!(feature = "parallel"))
}

/// Single-threaded commit; identical output distribution.
pub fn commit_sequential<R: RngCore + CryptoRng>(
    elements: &[Vec<u8>],
    lambda_bits: u32,
    rng: &mut R,
) -> Result<(ZksState, ZksCommitment), ZksError> {
    commit_inner(elements, lambda_bits, rng, false)
}

fn commit_inner<R: RngCore + CryptoRng>(
    elements: &[Vec<u8>],
    lambda_bits: u32,
    rng: &mut R,
    parallel: bool,
) -> Result<(ZksState, ZksCommitment), ZksError> {
    if lambda_bits < MIN_LAMBDA_BITS || lambda_bits % 8 != 0 {
        return Err(ZksError::LambdaTooSmall);
    }
    let mut by_element: HashMap<Vec<u8>, usize> = HashMap::with_capacity(elements.len());
    for (i, d) in elements.iter().enumerate() {
        if let Some(&first) = by_element.get(d) {
            return Err(ZksError::DuplicateElement { first, second: i });
        }
        by_element.insert(d.clone(), i);
    }
    let keypair = VrfKeypair::generate(rng);

    // Randomness is drawn sequentially from the caller's rng; the VRF
    // evaluations (the expensive part) then run data-parallel.
    let lambda_bytes = (lambda_bits / 8) as usize;
    let blindings: Vec<Vec<u8>> = (0..elements.len())
        .map(|_| {
            let mut r = vec![0u8; lambda_bytes];
            rng.fill_bytes(&mut r);
            r
        })
        .collect();

    let sk = *keypair.secret();
    let keys = eval_keys(elements, &sk, parallel);

    let mut entries = Vec::with_capacity(elements.len());
    let mut map = std::collections::BTreeMap::new();
    for ((element, r), key) in elements.iter().zip(blindings).zip(keys) {
        map.insert(key, leaf_value(element, &r));
        entries.push(ZksEntry { element: element.clone(), r, key });
    }
    // Distinct elements give distinct VRF outputs, so a key collision means
    // a SHA-256 collision; surface it rather than silently dropping a leaf.
    if map.len() != elements.len() {
        return Err(ZksError::KeyCollision);
    }

    let (trie, com) = if parallel {
        accumulator::commit(&map)
    } else {
        accumulator::commit_sequential(&map)
    };
    let commitment = ZksCommitment { pk: *keypair.public(), com };
    let state = ZksState { keypair, lambda_bits, entries, by_element, trie };
    Ok((state, commitment))
}

#[cfg(feature = "parallel")]
fn eval_keys(elements: &[Vec<u8>], sk: &Scalar, parallel: bool) -> Vec<TrieKey> {
    use rayon::prelude::*;
    if parallel {
        elements
            .par_iter()
            .map(|d| key_for_vrf_output(&vrf::vrf_eval(sk, d).expect("nonzero sk")))
            .collect()
    } else {
        eval_keys_seq(elements, sk)
    }
}

#[cfg(not(feature = "parallel"))]
fn eval_keys(elements: &[Vec<u8>], sk: &Scalar, _parallel: bool) -> Vec<TrieKey> {
    eval_keys_seq(elements, sk)
}

fn eval_keys_seq(elements: &[Vec<u8>], sk: &Scalar) -> Vec<TrieKey> {
    elements
        .iter()
        .map(|d| key_for_vrf_output(&vrf::vrf_eval(sk, d).expect("nonzero sk")))
        .collect()
}

impl ZksState {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lambda_bits(&self) -> u32 {
        self.lambda_bits
    }

    pub fn commitment(&self) -> ZksCommitment {
        ZksCommitment { pk: *self.keypair.public(), com: self.trie.commitment() }
    }

    /// Serialized prover state. Trie keys are stored so reload skips the VRF
    /// evaluations; the trie itself is rebuilt from hashes on load.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.u8(FORMAT_VERSION);
        w.u8(TYPE_STATE);
        w.u8(GROUP_ID_BYTE);
        w.u8(HashAlg::Sha256.id_byte());
        w.u32(self.lambda_bits);
        w.raw(&self.keypair.secret().to_bytes());
        w.u64(self.entries.len() as u64);
        for e in &self.entries {
            w.var_bytes(&e.element);
            w.var_bytes(&e.r);
            w.raw(&e.key.0);
        }
        w.into_bytes()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<ZksState, ZksError> {
        let mut r = Reader::new(bytes);
        if r.u8()? != FORMAT_VERSION {
            return Err(ZksError::Malformed("unsupported format version"));
        }
        if r.u8()? != TYPE_STATE {
            return Err(ZksError::Malformed("wrong artifact type"));
        }
        if r.u8()? != GROUP_ID_BYTE {
            return Err(ZksError::Malformed("unsupported group identifier"));
        }
        if r.u8()? != HashAlg::Sha256.id_byte() {
            return Err(ZksError::Malformed("unsupported hash identifier"));
        }
        let lambda_bits = r.u32()?;
        if lambda_bits < MIN_LAMBDA_BITS || lambda_bits % 8 != 0 {
            return Err(ZksError::LambdaTooSmall);
        }
        let sk_bytes: [u8; 32] = r.take(32)?.try_into().unwrap();
        let sk = Scalar::from_bytes(&sk_bytes).ok_or(ZksError::Malformed("non-canonical sk"))?;
        let keypair = VrfKeypair::from_secret(sk).map_err(|_| ZksError::BadSecretKey)?;
        let n = r.u64()? as usize;
        let mut entries = Vec::with_capacity(n);
        let mut by_element = HashMap::with_capacity(n);
        let mut map = std::collections::BTreeMap::new();
        for i in 0..n {
            let element = r.var_bytes()?.to_vec();
            let blinding = r.var_bytes()?.to_vec();
            let key = TrieKey(r.take(32)?.try_into().unwrap());
            if by_element.insert(element.clone(), i).is_some() {
                return Err(ZksError::Malformed("duplicate element in state"));
            }
            map.insert(key, leaf_value(&element, &blinding));
            entries.push(ZksEntry { element, r: blinding, key });
        }
        r.expect_end()?;
        if map.len() != entries.len() {
            return Err(ZksError::Malformed("duplicate trie key in state"));
        }
        let (trie, _) = accumulator::commit(&map);
        Ok(ZksState { keypair, lambda_bits, entries, by_element, trie })
    }
}

/// Answers a membership query with a verifiable proof. Deterministic in the
/// response and trie key; the VRF proof itself is randomized.
pub fn query<R: RngCore + CryptoRng>(
    state: &ZksState,
    element: &[u8],
    rng: &mut R,
) -> (ZksResponse, ZksQueryProof) {
    let sk = state.keypair.secret();
    let y = vrf::vrf_eval(sk, element).expect("state holds a nonzero sk");
    let vrf_proof = vrf::vrf_prove(sk, element, &y, rng);
    let key = key_for_vrf_output(&y);
    match state.by_element.get(element) {
        Some(&idx) => {
            let entry = &state.entries[idx];
            debug_assert_eq!(entry.key, key);
            let acc = accumulator::prove_inclusion(&state.trie, &key)
                .expect("member key is in the trie");
            (
                ZksResponse::Member,
                ZksQueryProof {
                    y,
                    vrf_proof,
                    acc: ZksAccProof::Inclusion(acc),
                    opening: Some(entry.r.clone()),
                },
            )
        }
        None => {
            let acc = accumulator::prove_non_inclusion(&state.trie, &key)
                .expect("non-member key is absent from the trie");
            (
                ZksResponse::NonMember,
                ZksQueryProof { y, vrf_proof, acc: ZksAccProof::NonInclusion(acc), opening: None },
            )
        }
    }
}

/// Accepts iff the VRF proof ties D to y under the commitment's pk, and the
/// accumulator proof at key H(y) matches the claimed response. Member proofs
/// must open the leaf value as H(D || r); non-member proofs must carry no
/// opening. A proof whose variant disagrees with `resp` is rejected.
pub fn verify(
    commitment: &ZksCommitment,
    element: &[u8],
    resp: ZksResponse,
    proof: &ZksQueryProof,
) -> bool {
    if !vrf::vrf_verify(&commitment.pk, element, &proof.y, &proof.vrf_proof) {
        return false;
    }
    let key = key_for_vrf_output(&proof.y);
    match (resp, &proof.acc) {
        (ZksResponse::Member, ZksAccProof::Inclusion(acc)) => match &proof.opening {
            Some(r) => {
                let value = leaf_value(element, r);
                accumulator::verify_inclusion(&commitment.com, &key, &value, acc)
            }
            None => false,
        },
        (ZksResponse::NonMember, ZksAccProof::NonInclusion(acc)) => {
            proof.opening.is_none() && accumulator::verify_non_inclusion(&commitment.com, &key, acc)
        }
        _ => false,
    }
}

impl ZksQueryProof {
    pub fn to_bytes(&self, resp: ZksResponse) -> Vec<u8> {
        let mut w = Writer::new();
        w.u8(FORMAT_VERSION);
        w.u8(TYPE_QUERY_PROOF);
        w.u8(GROUP_ID_BYTE);
        w.u8(HashAlg::Sha256.id_byte());
        w.u8(resp.as_bit());
        w.raw(&self.y.to_bytes());
        w.raw(&self.vrf_proof.to_bytes());
        match &self.acc {
            ZksAccProof::Inclusion(p) => w.var_bytes(&p.to_bytes()),
            ZksAccProof::NonInclusion(p) => w.var_bytes(&p.to_bytes()),
        }
        match &self.opening {
            Some(r) => {
                w.u8(1);
                w.var_bytes(r);
            }
            None => w.u8(0),
        }
        w.into_bytes()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<(ZksResponse, ZksQueryProof), ZksError> {
        let mut r = Reader::new(bytes);
        if r.u8()? != FORMAT_VERSION {
            return Err(ZksError::Malformed("unsupported format version"));
        }
        if r.u8()? != TYPE_QUERY_PROOF {
            return Err(ZksError::Malformed("wrong artifact type"));
        }
        if r.u8()? != GROUP_ID_BYTE {
            return Err(ZksError::Malformed("unsupported group identifier"));
        }
        if r.u8()? != HashAlg::Sha256.id_byte() {
            return Err(ZksError::Malformed("unsupported hash identifier"));
        }
        let resp = ZksResponse::from_bit(r.u8()?)
            .ok_or(ZksError::Malformed("response must be 0 or 1"))?;
        let y = GroupElement::from_bytes(r.take(32)?.try_into().unwrap())
            .ok_or(ZksError::Malformed("y is not a canonical group element"))?;
        let vrf_bytes: [u8; 64] = r.take(64)?.try_into().unwrap();
        let vrf_proof =
            VrfProof::from_bytes(&vrf_bytes).map_err(|_| ZksError::Malformed("bad VRF proof"))?;
        let acc_bytes = r.var_bytes()?;
        let acc = match resp {
            ZksResponse::Member => ZksAccProof::Inclusion(InclusionProof::from_bytes(acc_bytes)?),
            ZksResponse::NonMember => {
                ZksAccProof::NonInclusion(NonInclusionProof::from_bytes(acc_bytes)?)
            }
        };
        let opening = match r.u8()? {
            0 => None,
            1 => Some(r.var_bytes()?.to_vec()),
            _ => return Err(ZksError::Malformed("bad opening marker")),
        };
        r.expect_end()?;
        Ok((resp, ZksQueryProof { y, vrf_proof, acc, opening }))
    }
}

impl ZksCommitment {
    /// The public text record embedding the commitment, e.g. for an AI bill
    /// of materials.
    pub fn to_text(&self) -> String {
        format!(
            "{COMMITMENT_HEADER}\ngroup: {GROUP_ID}\nhash: {}\npk: {}\nroot: {}\nn: {}\n",
            HashAlg::Sha256.name(),
            hex::encode(self.pk.to_bytes()),
            self.com.root.to_hex(),
            self.com.n,
        )
    }

    pub fn from_text(text: &str) -> Result<ZksCommitment, ZksError> {
        let mut lines = text.lines();
        if lines.next() != Some(COMMITMENT_HEADER) {
            return Err(ZksError::Malformed("unknown commitment header"));
        }
        let mut pk = None;
        let mut root = None;
        let mut n = None;
        for line in lines {
            let Some((k, v)) = line.split_once(": ") else {
                if line.trim().is_empty() {
                    continue;
                }
                return Err(ZksError::Malformed("bad commitment line"));
            };
            match k {
                "group" => {
                    if v != GROUP_ID {
                        return Err(ZksError::Malformed("unsupported group identifier"));
                    }
                }
                "hash" => {
                    if v != HashAlg::Sha256.name() {
                        return Err(ZksError::Malformed("unsupported hash identifier"));
                    }
                }
                "pk" => {
                    let bytes: [u8; 32] = hex::decode(v)
                        .ok()
                        .and_then(|b| b.try_into().ok())
                        .ok_or(ZksError::Malformed("bad pk hex"))?;
                    pk = Some(
                        GroupElement::from_bytes(&bytes)
                            .ok_or(ZksError::Malformed("pk is not a canonical group element"))?,
                    );
                }
                "root" => {
                    root = Some(
                        Digest::from_hex(v).map_err(|_| ZksError::Malformed("bad root hex"))?,
                    );
                }
                "n" => {
                    n = Some(v.parse::<u64>().map_err(|_| ZksError::Malformed("bad n"))?);
                }
                _ => return Err(ZksError::Malformed("unknown commitment field")),
            }
        }
        match (pk, root, n) {
            (Some(pk), Some(root), Some(n)) => {
                Ok(ZksCommitment { pk, com: TrieCommitment { root, n } })
            }
            _ => Err(ZksError::Malformed("missing commitment field")),
        }
    }
}

/// The documented canonical element for a dataset file: the SHA-256 of its
/// raw bytes. Callers with structured datasets should hash their own
/// canonical encoding and pass the digest as the element.
pub fn element_for_file(path: &std::path::Path) -> std::io::Result<Vec<u8>> {
    use std::io::Read;
    let mut f = std::fs::File::open(path)?;
    let mut hasher = crate::digest::Hasher::new(HashAlg::Sha256);
    let mut buf = vec![0u8; 64 * 1024];
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hasher.finalize().as_bytes().to_vec())
}
