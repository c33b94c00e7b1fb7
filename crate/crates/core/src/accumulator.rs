//! Static Patricia-Merkle accumulator over 256-bit keys: a succinct
//! commitment to a key->value map with inclusion proofs and longest-prefix
//! non-inclusion proofs.
//!
//! Structure. Keys are 256-bit strings forming a binary trie with compressed
//! edges. For a nonempty map the root is always an internal node with the
//! empty prefix; its children are the subtrees of keys starting with bit 0
//! and bit 1. A side with no keys carries the empty-subtree sentinel hash and
//! a one-bit suffix. Every other internal node has two real children (a
//! divergence point always splits keys both ways), so sentinels appear only
//! at the root. The forced empty-prefix root guarantees every query key has a
//! longest-prefix witness node, which is what non-inclusion proofs point at.
//!
//! Hashing (SHA-256 throughout, with per-role tags; all inputs framed):
//!
//! * leaf:      H(tag_leaf, key, value)
//! * internal:  H(tag_internal, p, h0, h1, c0, c1) where c0/c1 are the child
//!   suffixes relative to p (child full paths are p||c0, p||c1)
//! * empty map root: H(tag_empty)
//! * empty subtree sentinel: H(tag_empty_subtree)
//!
//! Degenerate cases: an empty map commits to the documented constant root; a
//! single entry is wrapped by the internal rule with the sentinel as its
//! sibling, and its inclusion proof carries an empty sibling path (the
//! verifier recomputes the wrap when the commitment size is 1).

use std::collections::BTreeMap;

use thiserror::Error;

use crate::codec::{BitStr, CodecError, Reader, Writer};
use crate::digest::{sha256_tagged, Digest, HashAlg};

const TAG_LEAF: &[u8] = b"modelseal/v1/acc-leaf";
const TAG_INTERNAL: &[u8] = b"modelseal/v1/acc-internal";
const TAG_EMPTY_ROOT: &[u8] = b"modelseal/v1/acc-empty";
const TAG_EMPTY_SUBTREE: &[u8] = b"modelseal/v1/acc-empty-subtree";

const KEY_BITS: usize = 256;

/// Serialization format version and type tags.
const FORMAT_VERSION: u8 = 1;
const TYPE_INCLUSION: u8 = 1;
const TYPE_NON_INCLUSION: u8 = 2;
const TYPE_COMMITMENT: u8 = 3;

#[cfg(feature = "parallel")]
const PARALLEL_BUILD_THRESHOLD: usize = 4096;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TrieError {
    #[error("key is not a member; request a non-inclusion proof instead")]
    KeyAbsent,
    #[error("key is a member; request an inclusion proof instead")]
    KeyPresent,
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error("malformed proof: {0}")]
    Malformed(&'static str),
}

/// A 256-bit trie key, ordered lexicographically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TrieKey(pub [u8; 32]);

impl TrieKey {
    pub fn from_digest(d: &Digest) -> TrieKey {
        TrieKey(*d.as_bytes())
    }

    fn bits(&self) -> BitStr {
        BitStr::from_bytes(&self.0)
    }
}

/// Root hash plus leaf count. The count participates in verification of the
/// single-entry and empty degenerate forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrieCommitment {
    pub root: Digest,
    pub n: u64,
}

impl TrieCommitment {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.u8(FORMAT_VERSION);
        w.u8(TYPE_COMMITMENT);
        w.u8(HashAlg::Sha256.id_byte());
        w.digest(&self.root);
        w.u64(self.n);
        w.into_bytes()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<TrieCommitment, TrieError> {
        let mut r = Reader::new(bytes);
        expect_header(&mut r, TYPE_COMMITMENT)?;
        let root = r.digest()?;
        let n = r.u64()?;
        r.expect_end()?;
        Ok(TrieCommitment { root, n })
    }
}

fn expect_header(r: &mut Reader<'_>, expected_type: u8) -> Result<(), TrieError> {
    if r.u8()? != FORMAT_VERSION {
        return Err(TrieError::Malformed("unsupported format version"));
    }
    if r.u8()? != expected_type {
        return Err(TrieError::Malformed("wrong artifact type"));
    }
    if r.u8()? != HashAlg::Sha256.id_byte() {
        return Err(TrieError::Malformed("unsupported hash identifier"));
    }
    Ok(())
}

enum Node {
    Leaf { key: TrieKey, value: Digest, hash: Digest },
    Internal { prefix: BitStr, children: [Child; 2], hash: Digest },
}

enum Child {
    Empty,
    Node(Box<Node>),
}

impl Node {
    fn hash(&self) -> Digest {
        match self {
            Node::Leaf { hash, .. } | Node::Internal { hash, .. } => *hash,
        }
    }

    /// Full path of this node from the trie root: the key for a leaf, the
    /// owned prefix for an internal node.
    fn full_path(&self) -> BitStr {
        match self {
            Node::Leaf { key, .. } => key.bits(),
            Node::Internal { prefix, .. } => prefix.clone(),
        }
    }
}

impl Child {
    fn hash(&self) -> Digest {
        match self {
            Child::Empty => empty_subtree_hash(),
            Child::Node(n) => n.hash(),
        }
    }

    /// Child suffix relative to the parent prefix. Sentinel children occupy
    /// a single bit.
    fn suffix(&self, parent_prefix_len: usize, side: bool) -> BitStr {
        match self {
            Child::Empty => BitStr::single(side),
            Child::Node(n) => n.full_path().suffix(parent_prefix_len),
        }
    }
}

/// The built trie. Immutable once committed; proving borrows it.
pub struct TrieState {
    root: Option<Node>,
    n: u64,
}

pub fn leaf_hash(key: &TrieKey, value: &Digest) -> Digest {
    sha256_tagged(TAG_LEAF, &[&key.0, value.as_bytes()])
}

pub fn internal_hash(p: &BitStr, h0: &Digest, h1: &Digest, c0: &BitStr, c1: &BitStr) -> Digest {
    let mut pw = Writer::new();
    pw.bitstr(p);
    let mut c0w = Writer::new();
    c0w.bitstr(c0);
    let mut c1w = Writer::new();
    c1w.bitstr(c1);
    sha256_tagged(
        TAG_INTERNAL,
        &[
            &pw.into_bytes(),
            h0.as_bytes(),
            h1.as_bytes(),
            &c0w.into_bytes(),
            &c1w.into_bytes(),
        ],
    )
}

/// Root of the empty map. A documented constant:
/// SHA-256 over the framed tag "modelseal/v1/acc-empty".
pub fn empty_root() -> Digest {
    sha256_tagged(TAG_EMPTY_ROOT, &[])
}

/// Sentinel standing in for an absent child subtree.
pub fn empty_subtree_hash() -> Digest {
    sha256_tagged(TAG_EMPTY_SUBTREE, &[])
}

/// Builds the canonical trie over the map. The commitment depends only on
/// the map contents, never on construction order.
pub fn commit(entries: &BTreeMap<TrieKey, Digest>) -> (TrieState, TrieCommitment) {
    commit_inner(entries, cfg!(feature = "parallel"))
}

/// Single-threaded commit; always available, byte-identical output.
pub fn commit_sequential(entries: &BTreeMap<TrieKey, Digest>) -> (TrieState, TrieCommitment) {
    commit_inner(entries, false)
}

fn commit_inner(entries: &BTreeMap<TrieKey, Digest>, parallel: bool) -> (TrieState, TrieCommitment) {
    let sorted: Vec<(TrieKey, Digest)> = entries.iter().map(|(k, v)| (*k, *v)).collect();
    let n = sorted.len() as u64;
    if sorted.is_empty() {
        return (
            TrieState { root: None, n: 0 },
            TrieCommitment { root: empty_root(), n: 0 },
        );
    }
    let split = sorted.partition_point(|(k, _)| !k.bits().bit(0));
    let (zeros, ones) = sorted.split_at(split);
    let (left, right) = build_pair(zeros, ones, parallel);
    let children = [left, right];
    let prefix = BitStr::empty();
    let hash = internal_hash(
        &prefix,
        &children[0].hash(),
        &children[1].hash(),
        &children[0].suffix(0, false),
        &children[1].suffix(0, true),
    );
    let root = Node::Internal { prefix, children, hash };
    (
        TrieState { root: Some(root), n },
        TrieCommitment { root: hash, n },
    )
}

fn build_child(entries: &[(TrieKey, Digest)], parallel: bool) -> Child {
    if entries.is_empty() {
        Child::Empty
    } else {
        Child::Node(Box::new(build_subtree(entries, parallel)))
    }
}

#[cfg(feature = "parallel")]
fn build_pair(zeros: &[(TrieKey, Digest)], ones: &[(TrieKey, Digest)], parallel: bool) -> (Child, Child) {
    if parallel && zeros.len() + ones.len() >= PARALLEL_BUILD_THRESHOLD {
        rayon::join(|| build_child(zeros, parallel), || build_child(ones, parallel))
    } else {
        (build_child(zeros, false), build_child(ones, false))
    }
}

#[cfg(not(feature = "parallel"))]
fn build_pair(zeros: &[(TrieKey, Digest)], ones: &[(TrieKey, Digest)], _parallel: bool) -> (Child, Child) {
    (build_child(zeros, false), build_child(ones, false))
}

/// `entries` is sorted, nonempty, and all keys share a common prefix at
/// least as long as any caller-established split point.
fn build_subtree(entries: &[(TrieKey, Digest)], parallel: bool) -> Node {
    if entries.len() == 1 {
        let (key, value) = entries[0];
        let hash = leaf_hash(&key, &value);
        return Node::Leaf { key, value, hash };
    }
    let first = entries.first().unwrap().0.bits();
    let last = entries.last().unwrap().0.bits();
    // Sorted input means the common prefix of (first, last) is common to all.
    let lcp = BitStr::lcp_len(&first, &last);
    debug_assert!(lcp < KEY_BITS, "duplicate keys cannot reach here");
    let prefix = first.prefix(lcp);
    let split = entries.partition_point(|(k, _)| !k.bits().bit(lcp));
    debug_assert!(split > 0 && split < entries.len());
    let (zeros, ones) = entries.split_at(split);
    let (left, right) = build_pair(zeros, ones, parallel);
    let children = [left, right];
    let hash = internal_hash(
        &prefix,
        &children[0].hash(),
        &children[1].hash(),
        &children[0].suffix(lcp, false),
        &children[1].suffix(lcp, true),
    );
    Node::Internal { prefix, children, hash }
}

impl TrieState {
    pub fn len(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn commitment(&self) -> TrieCommitment {
        match &self.root {
            None => TrieCommitment { root: empty_root(), n: 0 },
            Some(node) => TrieCommitment { root: node.hash(), n: self.n },
        }
    }

    pub fn contains(&self, key: &TrieKey) -> bool {
        self.lookup(key).is_some()
    }

    fn lookup(&self, key: &TrieKey) -> Option<&Digest> {
        let key_bits = key.bits();
        let mut cur = self.root.as_ref()?;
        loop {
            match cur {
                Node::Leaf { key: k, value, .. } => {
                    return if k == key { Some(value) } else { None };
                }
                Node::Internal { prefix, children, .. } => {
                    if !key_bits.starts_with(prefix) {
                        return None;
                    }
                    let side = key_bits.bit(prefix.len());
                    match &children[side as usize] {
                        Child::Empty => return None,
                        Child::Node(n) => {
                            if !key_bits.starts_with(&n.full_path()) {
                                return None;
                            }
                            cur = n;
                        }
                    }
                }
            }
        }
    }
}

/// One internal node crossed on the way to the root: its prefix, the sibling
/// subtree hash, and both child suffixes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathStep {
    pub prefix: BitStr,
    pub sibling: Digest,
    pub c0: BitStr,
    pub c1: BitStr,
}

/// Proof that `key` maps to `value`. `path` is ordered leaf-to-root and
/// carries at most one step per key bit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InclusionProof {
    pub key: TrieKey,
    pub value: Digest,
    pub path: Vec<PathStep>,
}

/// The longest-prefix witness for an absent key: the internal node z whose
/// prefix is a prefix of the key but neither of whose child paths leads
/// toward it, plus z's own path to the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessNode {
    pub prefix: BitStr,
    pub h0: Digest,
    pub h1: Digest,
    pub c0: BitStr,
    pub c1: BitStr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NonInclusionProof {
    /// The whole map is empty; the commitment itself proves absence.
    EmptyTree,
    Witness { node: WitnessNode, path: Vec<PathStep> },
}

/// Records the internal nodes crossed while descending to `stop_path`,
/// deepest first, excluding the node at `stop_path` itself.
fn collect_path(root: &Node, key_bits: &BitStr, stop_path_len: usize) -> Vec<PathStep> {
    let mut steps = Vec::new();
    let mut cur = root;
    loop {
        let Node::Internal { prefix, children, .. } = cur else { break };
        if prefix.len() >= stop_path_len {
            break;
        }
        let side = key_bits.bit(prefix.len());
        let (child, sibling) = (&children[side as usize], &children[!side as usize]);
        steps.push(PathStep {
            prefix: prefix.clone(),
            sibling: sibling.hash(),
            c0: children[0].suffix(prefix.len(), false),
            c1: children[1].suffix(prefix.len(), true),
        });
        match child {
            Child::Empty => break,
            Child::Node(n) => cur = n,
        }
    }
    steps.reverse();
    steps
}

pub fn prove_inclusion(state: &TrieState, key: &TrieKey) -> Result<InclusionProof, TrieError> {
    let value = *state.lookup(key).ok_or(TrieError::KeyAbsent)?;
    // The sole entry's proof is the empty path; the verifier recomputes the
    // single-leaf wrap from the commitment size.
    if state.n == 1 {
        return Ok(InclusionProof { key: *key, value, path: Vec::new() });
    }
    let root = state.root.as_ref().expect("nonempty state has a root");
    let path = collect_path(root, &key.bits(), KEY_BITS);
    Ok(InclusionProof { key: *key, value, path })
}

pub fn prove_non_inclusion(state: &TrieState, key: &TrieKey) -> Result<NonInclusionProof, TrieError> {
    if state.contains(key) {
        return Err(TrieError::KeyPresent);
    }
    let Some(root) = state.root.as_ref() else {
        return Ok(NonInclusionProof::EmptyTree);
    };
    let key_bits = key.bits();
    // Descend while the child path stays a prefix of the key; the node where
    // descent stops is the longest-prefix witness.
    let mut cur = root;
    let witness = loop {
        let Node::Internal { prefix, children, .. } = cur else {
            unreachable!("descent stops before entering a leaf on an absent key");
        };
        let side = key_bits.bit(prefix.len());
        match &children[side as usize] {
            Child::Node(n) if key_bits.starts_with(&n.full_path()) => cur = n,
            _ => {
                break WitnessNode {
                    prefix: prefix.clone(),
                    h0: children[0].hash(),
                    h1: children[1].hash(),
                    c0: children[0].suffix(prefix.len(), false),
                    c1: children[1].suffix(prefix.len(), true),
                };
            }
        }
    };
    let path = collect_path(root, &key_bits, witness.prefix.len());
    Ok(NonInclusionProof::Witness { node: witness, path })
}

/// Recomputes hashes from (start_hash at start_path) up through `path` and
/// compares against the root. Each step must be prefix-consistent with the
/// position below it.
fn verify_path(
    com_root: &Digest,
    start_hash: Digest,
    start_path: BitStr,
    path: &[PathStep],
) -> bool {
    let mut cur_hash = start_hash;
    let mut cur_path = start_path;
    for step in path {
        if step.prefix.len() >= cur_path.len() || !cur_path.starts_with(&step.prefix) {
            return false;
        }
        if step.c0.is_empty() || step.c0.bit(0) || step.c1.is_empty() || !step.c1.bit(0) {
            return false;
        }
        let side = cur_path.bit(step.prefix.len());
        let arm = if side { &step.c1 } else { &step.c0 };
        // The child suffix on our side must reproduce the position below.
        if step.prefix.len() + arm.len() != cur_path.len()
            || !cur_path.matches_at(step.prefix.len(), arm)
        {
            return false;
        }
        let (h0, h1) = if side {
            (step.sibling, cur_hash)
        } else {
            (cur_hash, step.sibling)
        };
        cur_hash = internal_hash(&step.prefix, &h0, &h1, &step.c0, &step.c1);
        cur_path = step.prefix.clone();
    }
    cur_path.is_empty() && cur_hash == *com_root
}

/// The documented single-leaf form: the leaf wrapped by the internal rule
/// with the empty-subtree sentinel as its sibling.
fn single_leaf_root(key: &TrieKey, leaf: &Digest) -> Digest {
    let key_bits = key.bits();
    let side = key_bits.bit(0);
    let sentinel = empty_subtree_hash();
    let (h0, h1) = if side { (sentinel, *leaf) } else { (*leaf, sentinel) };
    let (c0, c1) = if side {
        (BitStr::single(false), key_bits)
    } else {
        (key_bits, BitStr::single(true))
    };
    internal_hash(&BitStr::empty(), &h0, &h1, &c0, &c1)
}

pub fn verify_inclusion(
    com: &TrieCommitment,
    key: &TrieKey,
    value: &Digest,
    proof: &InclusionProof,
) -> bool {
    if proof.key != *key || proof.value != *value || proof.path.len() > KEY_BITS {
        return false;
    }
    let leaf = leaf_hash(key, value);
    if proof.path.is_empty() {
        return com.n == 1 && com.root == single_leaf_root(key, &leaf);
    }
    verify_path(&com.root, leaf, key.bits(), &proof.path)
}

pub fn verify_non_inclusion(com: &TrieCommitment, key: &TrieKey, proof: &NonInclusionProof) -> bool {
    match proof {
        NonInclusionProof::EmptyTree => com.n == 0 && com.root == empty_root(),
        NonInclusionProof::Witness { node, path } => {
            if path.len() > KEY_BITS {
                return false;
            }
            let key_bits = key.bits();
            // p must be a proper prefix of the key.
            if node.prefix.len() >= key_bits.len() || !key_bits.starts_with(&node.prefix) {
                return false;
            }
            // Child suffixes must be well-formed (nonempty, correct lead bit).
            if node.c0.is_empty() || node.c0.bit(0) || node.c1.is_empty() || !node.c1.bit(0) {
                return false;
            }
            let side = key_bits.bit(node.prefix.len());
            let (arm, arm_hash) = if side {
                (&node.c1, &node.h1)
            } else {
                (&node.c0, &node.h0)
            };
            // The key's direction must be dead at z: either that side is the
            // empty sentinel, or the child path diverges from the key.
            let side_is_sentinel =
                *arm_hash == empty_subtree_hash() && *arm == BitStr::single(side);
            let arm_leads_to_key = node.prefix.len() + arm.len() <= key_bits.len()
                && key_bits.matches_at(node.prefix.len(), arm);
            if !side_is_sentinel && arm_leads_to_key {
                return false;
            }
            let h_z = internal_hash(&node.prefix, &node.h0, &node.h1, &node.c0, &node.c1);
            verify_path(&com.root, h_z, node.prefix.clone(), path)
        }
    }
}

fn write_step(w: &mut Writer, step: &PathStep) {
    w.bitstr(&step.prefix);
    w.digest(&step.sibling);
    w.bitstr(&step.c0);
    w.bitstr(&step.c1);
}

fn read_step(r: &mut Reader<'_>) -> Result<PathStep, TrieError> {
    Ok(PathStep {
        prefix: r.bitstr()?,
        sibling: r.digest()?,
        c0: r.bitstr()?,
        c1: r.bitstr()?,
    })
}

fn write_path(w: &mut Writer, path: &[PathStep]) {
    w.u32(path.len() as u32);
    for step in path {
        write_step(w, step);
    }
}

fn read_path(r: &mut Reader<'_>) -> Result<Vec<PathStep>, TrieError> {
    let n = r.u32()? as usize;
    if n > KEY_BITS {
        return Err(TrieError::Malformed("path longer than key bit-length"));
    }
    (0..n).map(|_| read_step(r)).collect()
}

impl InclusionProof {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.u8(FORMAT_VERSION);
        w.u8(TYPE_INCLUSION);
        w.u8(HashAlg::Sha256.id_byte());
        w.raw(&self.key.0);
        w.digest(&self.value);
        write_path(&mut w, &self.path);
        w.into_bytes()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<InclusionProof, TrieError> {
        let mut r = Reader::new(bytes);
        expect_header(&mut r, TYPE_INCLUSION)?;
        let key = TrieKey(r.take(32)?.try_into().unwrap());
        let value = r.digest()?;
        let path = read_path(&mut r)?;
        r.expect_end()?;
        Ok(InclusionProof { key, value, path })
    }
}

impl NonInclusionProof {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.u8(FORMAT_VERSION);
        w.u8(TYPE_NON_INCLUSION);
        w.u8(HashAlg::Sha256.id_byte());
        match self {
            NonInclusionProof::EmptyTree => w.u8(0),
            NonInclusionProof::Witness { node, path } => {
                w.u8(1);
                w.bitstr(&node.prefix);
                w.digest(&node.h0);
                w.digest(&node.h1);
                w.bitstr(&node.c0);
                w.bitstr(&node.c1);
                write_path(&mut w, path);
            }
        }
        w.into_bytes()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<NonInclusionProof, TrieError> {
        let mut r = Reader::new(bytes);
        expect_header(&mut r, TYPE_NON_INCLUSION)?;
        let proof = match r.u8()? {
            0 => NonInclusionProof::EmptyTree,
            1 => {
                let node = WitnessNode {
                    prefix: r.bitstr()?,
                    h0: r.digest()?,
                    h1: r.digest()?,
                    c0: r.bitstr()?,
                    c1: r.bitstr()?,
                };
                let path = read_path(&mut r)?;
                NonInclusionProof::Witness { node, path }
            }
            _ => return Err(TrieError::Malformed("unknown non-inclusion variant")),
        };
        r.expect_end()?;
        Ok(proof)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::digest::hash_bytes;

    fn key_from_byte(b: u8) -> TrieKey {
        // 8-bit universe embedded in the top byte; remaining bits zero.
        let mut k = [0u8; 32];
        k[0] = b;
        TrieKey(k)
    }

    fn value_for(i: u64) -> Digest {
        hash_bytes(HashAlg::Sha256, &i.to_le_bytes())
    }

    #[test]
    fn empty_map_commitment_and_non_inclusion() {
        let (state, com) = commit(&BTreeMap::new());
        assert_eq!(com.root, empty_root());
        assert_eq!(com.n, 0);
        let proof = prove_non_inclusion(&state, &key_from_byte(7)).unwrap();
        assert_eq!(proof, NonInclusionProof::EmptyTree);
        assert!(verify_non_inclusion(&com, &key_from_byte(7), &proof));
        assert!(prove_inclusion(&state, &key_from_byte(7)).is_err());
    }

    #[test]
    fn single_entry_wrap_rule_hand_computed() {
        let key = key_from_byte(0b1010_0000);
        let value = value_for(1);
        let mut m = BTreeMap::new();
        m.insert(key, value);
        let (state, com) = commit(&m);
        assert_eq!(com.n, 1);

        // Hand-compute: leaf wrapped by the internal rule at the empty
        // prefix; the key starts with bit 1, so the sentinel sits on side 0.
        let leaf = leaf_hash(&key, &value);
        let expected = internal_hash(
            &BitStr::empty(),
            &empty_subtree_hash(),
            &leaf,
            &BitStr::single(false),
            &BitStr::from_bytes(&key.0),
        );
        assert_eq!(com.root, expected);

        let proof = prove_inclusion(&state, &key).unwrap();
        assert!(proof.path.is_empty(), "sole entry proves with an empty sibling path");
        assert!(verify_inclusion(&com, &key, &value, &proof));
    }

    #[test]
    fn commitment_is_order_insensitive() {
        // BTreeMap already canonicalizes order; build the same map through
        // different insertion orders and from commit vs commit_sequential.
        let keys: Vec<TrieKey> = (0u8..100).map(|i| {
            TrieKey(*hash_bytes(HashAlg::Sha256, &[i]).as_bytes())
        }).collect();
        let mut forward = BTreeMap::new();
        for (i, k) in keys.iter().enumerate() {
            forward.insert(*k, value_for(i as u64));
        }
        let mut backward = BTreeMap::new();
        for (i, k) in keys.iter().enumerate().rev() {
            backward.insert(*k, value_for(i as u64));
        }
        let (_, c1) = commit(&forward);
        let (_, c2) = commit(&backward);
        let (_, c3) = commit_sequential(&forward);
        assert_eq!(c1, c2);
        assert_eq!(c1, c3);
    }

    #[test]
    fn inclusion_proofs_verify_for_all_members() {
        let mut m = BTreeMap::new();
        for i in 0..64u64 {
            let k = TrieKey(*hash_bytes(HashAlg::Sha256, &i.to_le_bytes()).as_bytes());
            m.insert(k, value_for(i));
        }
        let (state, com) = commit(&m);
        for (k, v) in &m {
            let p = prove_inclusion(&state, k).unwrap();
            assert!(verify_inclusion(&com, k, v, &p));
            assert!(p.path.len() <= KEY_BITS);
            // Round-trip through serialization.
            let p2 = InclusionProof::from_bytes(&p.to_bytes()).unwrap();
            assert!(verify_inclusion(&com, k, v, &p2));
        }
    }

    #[test]
    fn wrong_value_or_key_rejected() {
        let mut m = BTreeMap::new();
        for i in 0..16u64 {
            m.insert(TrieKey(*value_for(i).as_bytes()), value_for(i + 100));
        }
        let (state, com) = commit(&m);
        let k = TrieKey(*value_for(3).as_bytes());
        let p = prove_inclusion(&state, &k).unwrap();
        assert!(verify_inclusion(&com, &k, &value_for(103), &p));
        assert!(!verify_inclusion(&com, &k, &value_for(104), &p));
        let other = TrieKey(*value_for(4).as_bytes());
        assert!(!verify_inclusion(&com, &other, &value_for(103), &p));
    }

    #[test]
    fn replay_against_other_root_rejected() {
        let mut m1 = BTreeMap::new();
        let mut m2 = BTreeMap::new();
        for i in 0..16u64 {
            m1.insert(TrieKey(*value_for(i).as_bytes()), value_for(i));
            m2.insert(TrieKey(*value_for(i + 50).as_bytes()), value_for(i));
        }
        let shared = TrieKey(*value_for(500).as_bytes());
        m1.insert(shared, value_for(1));
        m2.insert(shared, value_for(1));
        let (s1, c1) = commit(&m1);
        let (_, c2) = commit(&m2);
        let p = prove_inclusion(&s1, &shared).unwrap();
        assert!(verify_inclusion(&c1, &shared, &value_for(1), &p));
        assert!(!verify_inclusion(&c2, &shared, &value_for(1), &p));
    }

    /// Brute-force oracle: every key in an 8-bit universe, exact outcomes.
    #[test]
    fn eight_bit_universe_matches_membership_oracle() {
        let members: Vec<u8> = (0..=255u8).filter(|b| b.wrapping_mul(37) % 5 < 2).collect();
        let mut m = BTreeMap::new();
        for &b in &members {
            m.insert(key_from_byte(b), value_for(b as u64));
        }
        let (state, com) = commit(&m);
        for b in 0..=255u8 {
            let key = key_from_byte(b);
            let is_member = members.contains(&b);
            if is_member {
                let p = prove_inclusion(&state, &key).unwrap();
                assert!(verify_inclusion(&com, &key, &value_for(b as u64), &p));
                assert!(prove_non_inclusion(&state, &key).is_err());
            } else {
                let p = prove_non_inclusion(&state, &key).unwrap();
                assert!(verify_non_inclusion(&com, &key, &p), "byte {b}");
                assert!(prove_inclusion(&state, &key).is_err());
                let p2 = NonInclusionProof::from_bytes(&p.to_bytes()).unwrap();
                assert!(verify_non_inclusion(&com, &key, &p2));
            }
        }
    }

    #[test]
    fn non_inclusion_witness_rejected_for_member_key() {
        // A witness for an absent key sharing a prefix with a member must not
        // transfer to the member: the child-prefix check fires.
        let mut m = BTreeMap::new();
        m.insert(key_from_byte(0b0000_0000), value_for(0));
        m.insert(key_from_byte(0b0000_0001), value_for(1));
        m.insert(key_from_byte(0b1000_0000), value_for(2));
        let (state, com) = commit(&m);
        let absent = key_from_byte(0b0100_0000);
        let proof = prove_non_inclusion(&state, &absent).unwrap();
        assert!(verify_non_inclusion(&com, &absent, &proof));
        let member = key_from_byte(0b0000_0000);
        assert!(!verify_non_inclusion(&com, &member, &proof));
    }

    #[test]
    fn tampered_proofs_rejected() {
        let mut m = BTreeMap::new();
        for i in 0..64u64 {
            m.insert(TrieKey(*value_for(i).as_bytes()), value_for(i));
        }
        let (state, com) = commit(&m);
        let k = TrieKey(*value_for(7).as_bytes());
        let proof = prove_inclusion(&state, &k).unwrap();
        let bytes = proof.to_bytes();
        let mut rejected = 0;
        let mut trials = 0;
        for i in 3..bytes.len() {
            // Skip the header bytes; flipping those is a format error which
            // is also a rejection but less interesting.
            let mut bad = bytes.clone();
            bad[i] ^= 1 << (i % 8);
            trials += 1;
            match InclusionProof::from_bytes(&bad) {
                Err(_) => rejected += 1,
                Ok(p) => {
                    if !verify_inclusion(&com, &k, &value_for(7), &p) {
                        rejected += 1;
                    }
                }
            }
        }
        assert_eq!(rejected, trials, "every single-bit tamper must reject");
    }

    #[test]
    fn sentinel_cannot_claim_an_occupied_side() {
        // All keys start with bit 0, so the root's 1-side is the sentinel.
        let mut m = BTreeMap::new();
        m.insert(key_from_byte(0b0000_0001), value_for(1));
        m.insert(key_from_byte(0b0100_0000), value_for(2));
        let (state, com) = commit(&m);
        let absent = key_from_byte(0b1000_0000);
        let p = prove_non_inclusion(&state, &absent).unwrap();
        assert!(verify_non_inclusion(&com, &absent, &p));
        // Forging the same sentinel claim for the occupied 0-side fails.
        if let NonInclusionProof::Witness { node, path } = p {
            let forged = NonInclusionProof::Witness {
                node: WitnessNode {
                    prefix: node.prefix.clone(),
                    h0: empty_subtree_hash(),
                    h1: node.h1,
                    c0: BitStr::single(false),
                    c1: node.c1,
                },
                path,
            };
            let target = key_from_byte(0b0010_0000);
            assert!(!verify_non_inclusion(&com, &target, &forged));
        } else {
            panic!("expected witness variant");
        }
    }
}
