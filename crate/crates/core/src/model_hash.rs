//! Deterministic hashing of model artifacts: single files and directories.
//!
//! Two schemes. `Naive` hashes the file bytes in one pass and is the
//! baseline. `Chunked` splits the file into fixed-size chunks and hashes the
//! concatenation of per-chunk digests, H(H(C1) || ... || H(Cn)); chunk
//! digests are independent, so they parallelize, and a mismatch can be
//! localized to a chunk. The two schemes produce unrelated digests by
//! construction: a digest record always names its scheme.
//!
//! Directories hash to a manifest: one `path\tsize\thex-digest\n` line per
//! regular file, sorted by relative path bytes, then hashed. Signature files
//! (`*.sig`) are excluded so a bundle can sit next to the model it signs.

use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::digest::{hash_bytes, Digest, HashAlg, Hasher};

/// Default chunk size, 1 GiB. Tests and benchmarks use smaller chunks.
pub const DEFAULT_CHUNK_SIZE: u64 = 1 << 30;

const READ_BUF_SIZE: usize = 64 * 1024;

#[derive(Debug, Error)]
pub enum HashError {
    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("chunk size must be nonzero")]
    ZeroChunkSize,
    #[error("symlink {path} points outside the model root")]
    SymlinkEscape { path: PathBuf },
    #[error("path {path} is not valid UTF-8")]
    NonUtf8Path { path: PathBuf },
    #[error("{path} is neither a regular file nor a directory")]
    UnsupportedFileType { path: PathBuf },
}

fn io_err(path: &Path, source: std::io::Error) -> HashError {
    HashError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HashScheme {
    Naive,
    Chunked,
}

impl HashScheme {
    pub fn name(self) -> &'static str {
        match self {
            HashScheme::Naive => "naive",
            HashScheme::Chunked => "chunked",
        }
    }

    pub fn id_byte(self) -> u8 {
        match self {
            HashScheme::Naive => 1,
            HashScheme::Chunked => 2,
        }
    }

    pub fn from_id_byte(b: u8) -> Option<Self> {
        match b {
            1 => Some(HashScheme::Naive),
            2 => Some(HashScheme::Chunked),
            _ => None,
        }
    }
}

impl std::str::FromStr for HashScheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "naive" => Ok(HashScheme::Naive),
            "chunked" => Ok(HashScheme::Chunked),
            other => Err(format!("unknown hash scheme: {other}")),
        }
    }
}

impl std::fmt::Display for HashScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArtifactKind {
    File,
    Directory,
}

impl ArtifactKind {
    pub fn id_byte(self) -> u8 {
        match self {
            ArtifactKind::File => 1,
            ArtifactKind::Directory => 2,
        }
    }

    pub fn from_id_byte(b: u8) -> Option<Self> {
        match b {
            1 => Some(ArtifactKind::File),
            2 => Some(ArtifactKind::Directory),
            _ => None,
        }
    }
}

/// Hashing parameters. `chunk_size` is ignored by the naive scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashParams {
    pub alg: HashAlg,
    pub scheme: HashScheme,
    pub chunk_size: u64,
}

impl HashParams {
    pub fn naive(alg: HashAlg) -> Self {
        HashParams { alg, scheme: HashScheme::Naive, chunk_size: DEFAULT_CHUNK_SIZE }
    }

    pub fn chunked(alg: HashAlg, chunk_size: u64) -> Self {
        HashParams { alg, scheme: HashScheme::Chunked, chunk_size }
    }
}

/// A self-describing digest record: the digest plus everything needed to
/// recompute it. Two records are comparable only when all fields match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDigest {
    pub kind: ArtifactKind,
    pub alg: HashAlg,
    pub scheme: HashScheme,
    /// Present iff `scheme` is chunked.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub chunk_size: Option<u64>,
    pub digest: Digest,
}

impl ModelDigest {
    /// Fixed-layout encoding used inside signed payloads.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut w = crate::codec::Writer::new();
        w.u8(self.kind.id_byte());
        w.u8(self.alg.id_byte());
        w.u8(self.scheme.id_byte());
        match self.chunk_size {
            Some(cs) => {
                w.u8(1);
                w.u64(cs);
            }
            None => {
                w.u8(0);
                w.u64(0);
            }
        }
        w.digest(&self.digest);
        w.into_bytes()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub size: u64,
    pub digest: Digest,
}

/// Sorted per-file digests of a directory artifact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelManifest {
    pub entries: Vec<ManifestEntry>,
}

impl ModelManifest {
    /// One `path\tsize\thex-digest\n` line per file. The directory digest is
    /// the hash of exactly these bytes.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for e in &self.entries {
            out.extend_from_slice(e.path.as_bytes());
            out.push(b'\t');
            out.extend_from_slice(e.size.to_string().as_bytes());
            out.push(b'\t');
            out.extend_from_slice(e.digest.to_hex().as_bytes());
            out.push(b'\n');
        }
        out
    }
}

/// A hashed artifact. `manifest` is present iff the artifact is a directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashedModel {
    pub digest: ModelDigest,
    pub manifest: Option<ModelManifest>,
}

/// Hashes a file or directory. Uses data parallelism when the `parallel`
/// feature is enabled; output is byte-identical either way.
pub fn hash_model(path: &Path, params: HashParams) -> Result<HashedModel, HashError> {
    hash_model_inner(path, params, cfg!(feature = "parallel"))
}

/// Single-threaded variant of [`hash_model`] with identical output.
pub fn hash_model_sequential(path: &Path, params: HashParams) -> Result<HashedModel, HashError> {
    hash_model_inner(path, params, false)
}

fn hash_model_inner(
    path: &Path,
    params: HashParams,
    parallel: bool,
) -> Result<HashedModel, HashError> {
    let meta = std::fs::symlink_metadata(path).map_err(|e| io_err(path, e))?;
    if meta.file_type().is_symlink() {
        // A symlinked root is resolved; escape rules apply below it.
        let resolved = std::fs::metadata(path).map_err(|e| io_err(path, e))?;
        if resolved.is_dir() {
            return hash_directory(path, params, parallel);
        }
        let digest = hash_file_inner(path, params, parallel)?;
        return Ok(HashedModel { digest: file_record(params, digest), manifest: None });
    }
    if meta.is_dir() {
        return hash_directory(path, params, parallel);
    }
    if !meta.is_file() {
        return Err(HashError::UnsupportedFileType { path: path.to_path_buf() });
    }
    let digest = hash_file_inner(path, params, parallel)?;
    Ok(HashedModel { digest: file_record(params, digest), manifest: None })
}

fn file_record(params: HashParams, digest: Digest) -> ModelDigest {
    ModelDigest {
        kind: ArtifactKind::File,
        alg: params.alg,
        scheme: params.scheme,
        chunk_size: match params.scheme {
            HashScheme::Naive => None,
            HashScheme::Chunked => Some(params.chunk_size),
        },
        digest,
    }
}

/// Hashes a single file under `params`.
pub fn hash_file(path: &Path, params: HashParams) -> Result<Digest, HashError> {
    hash_file_inner(path, params, cfg!(feature = "parallel"))
}

/// Single-threaded variant of [`hash_file`] with identical output.
pub fn hash_file_sequential(path: &Path, params: HashParams) -> Result<Digest, HashError> {
    hash_file_inner(path, params, false)
}

fn hash_file_inner(path: &Path, params: HashParams, parallel: bool) -> Result<Digest, HashError> {
    match params.scheme {
        HashScheme::Naive => hash_file_naive(path, params.alg),
        HashScheme::Chunked => hash_file_chunked(path, params.alg, params.chunk_size, parallel),
    }
}

/// One streaming pass over the file bytes. Deliberately plain: this is the
/// baseline the chunked scheme is measured against.
fn hash_file_naive(path: &Path, alg: HashAlg) -> Result<Digest, HashError> {
    let mut f = File::open(path).map_err(|e| io_err(path, e))?;
    let mut hasher = Hasher::new(alg);
    let mut buf = vec![0u8; READ_BUF_SIZE];
    loop {
        let n = f.read(&mut buf).map_err(|e| io_err(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hasher.finalize())
}

fn hash_file_chunked(
    path: &Path,
    alg: HashAlg,
    chunk_size: u64,
    parallel: bool,
) -> Result<Digest, HashError> {
    if chunk_size == 0 {
        return Err(HashError::ZeroChunkSize);
    }
    let f = File::open(path).map_err(|e| io_err(path, e))?;
    let len = f.metadata().map_err(|e| io_err(path, e))?.len();
    if len == 0 {
        // An empty file is one empty chunk, not zero chunks, so the result
        // is still a hash of a digest list.
        return Ok(fold_chunk_digests(alg, std::iter::once(hash_bytes(alg, &[]))));
    }
    // mmap avoids the kernel-to-user copy of a read loop and exposes the
    // file as one slice the chunk digests can be computed over in parallel.
    // Some file kinds cannot be mapped; fall back to streaming.
    match unsafe { memmap2::Mmap::map(&f) } {
        Ok(map) => {
            let _ = map.advise(memmap2::Advice::Sequential);
            let bytes: &[u8] = &map;
            let cs = usize::try_from(chunk_size).unwrap_or(usize::MAX);
            // Queue chunk i+1 with the kernel before hashing chunk i, so a
            // cold file streams in behind the arithmetic instead of stalling
            // it at every readahead boundary. On warm pages this is a no-op.
            let prefetch = |i: usize| {
                let Some(next) = i.checked_add(1).and_then(|n| n.checked_mul(cs)) else {
                    return;
                };
                if next < bytes.len() {
                    let len = cs.min(bytes.len() - next);
                    let _ = map.advise_range(memmap2::Advice::WillNeed, next, len);
                }
            };
            let digests = chunk_digests(bytes, alg, cs, parallel, &prefetch);
            Ok(fold_chunk_digests(alg, digests.into_iter()))
        }
        Err(_) => streaming_chunked(&mut (&f), path, alg, chunk_size),
    }
}

/// The chunked digest of an in-memory byte string. Reference entry point
/// for tests and small inputs; the file path shares its chunk fold.
pub fn chunked_digest_of_bytes(bytes: &[u8], alg: HashAlg, chunk_size: u64) -> Digest {
    assert!(chunk_size > 0, "chunk size must be nonzero");
    chunked_digest_of_bytes_inner(bytes, alg, chunk_size, cfg!(feature = "parallel"))
}

fn chunked_digest_of_bytes_inner(
    bytes: &[u8],
    alg: HashAlg,
    chunk_size: u64,
    parallel: bool,
) -> Digest {
    if bytes.is_empty() {
        return fold_chunk_digests(alg, std::iter::once(hash_bytes(alg, &[])));
    }
    let cs = usize::try_from(chunk_size).unwrap_or(usize::MAX);
    let digests = chunk_digests(bytes, alg, cs, parallel, &|_| {});
    fold_chunk_digests(alg, digests.into_iter())
}

#[cfg(feature = "parallel")]
fn chunk_digests(
    bytes: &[u8],
    alg: HashAlg,
    cs: usize,
    parallel: bool,
    before: &(dyn Fn(usize) + Sync),
) -> Vec<Digest> {
    use rayon::prelude::*;
    if parallel {
        bytes
            .par_chunks(cs)
            .enumerate()
            .map(|(i, c)| {
                before(i);
                hash_bytes(alg, c)
            })
            .collect()
    } else {
        bytes
            .chunks(cs)
            .enumerate()
            .map(|(i, c)| {
                before(i);
                hash_bytes(alg, c)
            })
            .collect()
    }
}

#[cfg(not(feature = "parallel"))]
fn chunk_digests(
    bytes: &[u8],
    alg: HashAlg,
    cs: usize,
    _parallel: bool,
    before: &(dyn Fn(usize) + Sync),
) -> Vec<Digest> {
    bytes
        .chunks(cs)
        .enumerate()
        .map(|(i, c)| {
            before(i);
            hash_bytes(alg, c)
        })
        .collect()
}

fn fold_chunk_digests(alg: HashAlg, digests: impl Iterator<Item = Digest>) -> Digest {
    let mut outer = Hasher::new(alg);
    for d in digests {
        outer.update(d.as_bytes());
    }
    outer.finalize()
}

/// Chunked hashing over a reader, for sources that cannot be mapped.
/// Identical output to the mapped path.
fn streaming_chunked<R: Read>(
    r: &mut R,
    path: &Path,
    alg: HashAlg,
    chunk_size: u64,
) -> Result<Digest, HashError> {
    let mut outer = Hasher::new(alg);
    let mut chunk = Hasher::new(alg);
    let mut in_chunk: u64 = 0;
    let mut total: u64 = 0;
    let mut buf = vec![0u8; READ_BUF_SIZE];
    loop {
        let n = r.read(&mut buf).map_err(|e| io_err(path, e))?;
        if n == 0 {
            break;
        }
        let mut off = 0;
        while off < n {
            let room = usize::try_from(chunk_size - in_chunk).unwrap_or(usize::MAX);
            let take = room.min(n - off);
            chunk.update(&buf[off..off + take]);
            in_chunk += take as u64;
            off += take;
            if in_chunk == chunk_size {
                let done = std::mem::replace(&mut chunk, Hasher::new(alg));
                outer.update(done.finalize().as_bytes());
                in_chunk = 0;
            }
        }
        total += n as u64;
    }
    if in_chunk > 0 || total == 0 {
        outer.update(chunk.finalize().as_bytes());
    }
    Ok(outer.finalize())
}

fn hash_directory(
    root: &Path,
    params: HashParams,
    parallel: bool,
) -> Result<HashedModel, HashError> {
    let root_canon = root.canonicalize().map_err(|e| io_err(root, e))?;
    let mut files: Vec<(String, PathBuf)> = Vec::new();
    for entry in walkdir::WalkDir::new(root).follow_links(false) {
        let entry = entry.map_err(|e| {
            let path = e.path().map(Path::to_path_buf).unwrap_or_else(|| root.to_path_buf());
            match e.into_io_error() {
                Some(src) => HashError::Io { path, source: src },
                None => HashError::Io {
                    path,
                    source: std::io::Error::new(std::io::ErrorKind::Other, "walk error"),
                },
            }
        })?;
        let ft = entry.file_type();
        if ft.is_symlink() {
            // Links inside the tree are skipped (their targets are hashed
            // under their own paths); links out of the tree make the digest
            // depend on external state, so they are refused.
            match std::fs::canonicalize(entry.path()) {
                Ok(target) if target.starts_with(&root_canon) => continue,
                _ => return Err(HashError::SymlinkEscape { path: entry.path().to_path_buf() }),
            }
        }
        if ft.is_dir() {
            continue;
        }
        if !ft.is_file() {
            return Err(HashError::UnsupportedFileType { path: entry.path().to_path_buf() });
        }
        let rel = entry.path().strip_prefix(root).expect("walk stays under root");
        let rel_str = match rel.to_str() {
            Some(s) => normalize_separators(s),
            None => return Err(HashError::NonUtf8Path { path: entry.path().to_path_buf() }),
        };
        if rel_str.ends_with(".sig") {
            continue;
        }
        files.push((rel_str, entry.path().to_path_buf()));
    }
    // Manifest order is the byte order of relative paths, independent of
    // walk order or locale.
    files.sort_by(|a, b| a.0.as_bytes().cmp(b.0.as_bytes()));

    let entries = hash_manifest_entries(&files, params, parallel)?;
    let manifest = ModelManifest { entries };
    let digest = hash_bytes(params.alg, &manifest.canonical_bytes());
    Ok(HashedModel {
        digest: ModelDigest {
            kind: ArtifactKind::Directory,
            alg: params.alg,
            scheme: params.scheme,
            chunk_size: match params.scheme {
                HashScheme::Naive => None,
                HashScheme::Chunked => Some(params.chunk_size),
            },
            digest,
        },
        manifest: Some(manifest),
    })
}

#[cfg(windows)]
fn normalize_separators(s: &str) -> String {
    s.replace('\\', "/")
}

#[cfg(not(windows))]
fn normalize_separators(s: &str) -> String {
    s.to_string()
}

fn entry_for(path: &Path, rel: &str, params: HashParams, parallel: bool) -> Result<ManifestEntry, HashError> {
    let size = std::fs::metadata(path).map_err(|e| io_err(path, e))?.len();
    let digest = hash_file_inner(path, params, parallel)?;
    Ok(ManifestEntry { path: rel.to_string(), size, digest })
}

#[cfg(feature = "parallel")]
fn hash_manifest_entries(
    files: &[(String, PathBuf)],
    params: HashParams,
    parallel: bool,
) -> Result<Vec<ManifestEntry>, HashError> {
    use rayon::prelude::*;
    if parallel {
        files
            .par_iter()
            .map(|(rel, path)| entry_for(path, rel, params, true))
            .collect()
    } else {
        files.iter().map(|(rel, path)| entry_for(path, rel, params, false)).collect()
    }
}

#[cfg(not(feature = "parallel"))]
fn hash_manifest_entries(
    files: &[(String, PathBuf)],
    params: HashParams,
    _parallel: bool,
) -> Result<Vec<ManifestEntry>, HashError> {
    files.iter().map(|(rel, path)| entry_for(path, rel, params, false)).collect()
}
