//! modelseal: deterministic model hashing, signing backed by a transparency
//! log, and zero-knowledge dataset commitments, from the command line.
//!
//! Exit codes: 0 success or accepted verification, 1 verification rejected,
//! 2 usage error, 3 io error, 4 malformed input data, 5 internal error.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use modelseal::bench;
use modelseal::digest::HashAlg;
use modelseal::model_hash::{self, ArtifactKind, HashError, HashParams, HashScheme};
use modelseal::signing::{
    default_bundle_path, verify_model, CertificateAuthority, IdentityProvider, SignError,
    SignatureBundle, SigningService, TrustRoots, VerifyError,
};
use modelseal::translog::{self, LogError, TransparencyLog};
use modelseal::zks::{self, ZksCommitment, ZksError, ZksQueryProof, ZksResponse, ZksState};
use rand::rngs::OsRng;
use serde_json::json;

/// Contract caps for the bench surface: inputs stay desk-scale.
const BENCH_MAX_FILE: u64 = 4 << 30;
const BENCH_MAX_SET: u64 = 1_000_000;

const PROVIDER_KEY_FILE: &str = "provider.key";
const CA_KEY_FILE: &str = "ca.key";
const LOG_DIR: &str = "log";
const TRUST_ROOTS_FILE: &str = "trust_roots.json";

#[derive(Parser)]
#[command(name = "modelseal", version, about = "Seal and verify ML models and datasets")]
struct Cli {
    /// Emit machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Hash a model file or directory.
    Hash(HashCmd),
    /// Hash and sign a model, appending the signature to a transparency log.
    Sign(SignCmd),
    /// Verify a model against its signature bundle, fully offline.
    Verify(VerifyCmd),
    /// Commit to a set of dataset elements.
    ZksCommit(ZksCommitCmd),
    /// Prove membership or non-membership of one element.
    ZksProve(ZksProveCmd),
    /// Verify a membership proof against a commitment.
    ZksVerify(ZksVerifyCmd),
    /// Operate a local transparency log directory.
    Log(LogCmd),
    /// Timing benchmarks; every timed operation is also checked.
    Bench(BenchCmd),
}

#[derive(Args)]
struct HashCmd {
    /// Model file or directory.
    path: PathBuf,
    /// Hash algorithm.
    #[arg(long, default_value = "sha256")]
    alg: HashAlg,
    /// naive streams the artifact in one pass; chunked hashes fixed-size
    /// chunks and then the concatenated chunk digests.
    #[arg(long, default_value = "chunked")]
    scheme: HashScheme,
    /// Chunk size for the chunked scheme; KiB/MiB/GiB suffixes accepted.
    #[arg(long, default_value = "1GiB", value_parser = parse_size)]
    chunk_size: u64,
    /// Print per-file manifest lines for directories.
    #[arg(long)]
    manifest: bool,
}

#[derive(Args)]
struct SignCmd {
    /// Model file or directory.
    path: PathBuf,
    /// Identity to certify, e.g. an email or service account.
    #[arg(long)]
    identity: String,
    /// Directory holding provider, CA, and log state; created on first use.
    #[arg(long, default_value = "modelseal-state")]
    state_dir: PathBuf,
    #[arg(long, default_value = "sha256")]
    alg: HashAlg,
    #[arg(long, default_value = "chunked")]
    scheme: HashScheme,
    #[arg(long, default_value = "1GiB", value_parser = parse_size)]
    chunk_size: u64,
    /// Bundle destination; defaults to <path>.sig (model.sig inside a
    /// directory artifact).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyCmd {
    /// Model file or directory.
    path: PathBuf,
    /// Signature bundle; defaults to <path>.sig.
    #[arg(long)]
    bundle: Option<PathBuf>,
    /// Trust roots JSON file (written by sign into the state directory).
    #[arg(long)]
    trust_roots: PathBuf,
}

#[derive(Args)]
struct ZksCommitCmd {
    /// File with one element per line; the line bytes are the element.
    #[arg(long, required_unless_present = "dir")]
    list: Option<PathBuf>,
    /// Directory: each regular file's SHA-256 becomes one element.
    #[arg(long)]
    dir: Option<PathBuf>,
    /// Prover state destination. The state file contains key material and
    /// the set itself: keep it secret.
    #[arg(long)]
    state: PathBuf,
    /// Public commitment destination.
    #[arg(long)]
    commitment: PathBuf,
    /// Blinding length in bits; multiple of 8, at least 128.
    #[arg(long, default_value_t = zks::DEFAULT_LAMBDA_BITS)]
    lambda: u32,
}

#[derive(Args)]
struct ZksProveCmd {
    /// Prover state file written by zks-commit.
    #[arg(long)]
    state: PathBuf,
    /// Element as a literal string (the same bytes as a --list line).
    #[arg(long, conflicts_with = "element_file", required_unless_present = "element_file")]
    element: Option<String>,
    /// Element as a file, hashed the way zks-commit --dir hashes files.
    #[arg(long)]
    element_file: Option<PathBuf>,
    /// Proof destination.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct ZksVerifyCmd {
    /// Commitment file written by zks-commit.
    #[arg(long)]
    commitment: PathBuf,
    #[arg(long, conflicts_with = "element_file", required_unless_present = "element_file")]
    element: Option<String>,
    #[arg(long)]
    element_file: Option<PathBuf>,
    /// Proof file written by zks-prove.
    #[arg(long)]
    proof: PathBuf,
}

#[derive(Args)]
struct LogCmd {
    /// Log directory; created on first use.
    #[arg(long)]
    dir: PathBuf,
    #[command(subcommand)]
    action: LogAction,
}

#[derive(Subcommand)]
enum LogAction {
    /// Append a payload and print the new signed checkpoint.
    Append {
        #[arg(long, conflicts_with = "payload_file", required_unless_present = "payload_file")]
        payload: Option<String>,
        #[arg(long)]
        payload_file: Option<PathBuf>,
    },
    /// Inclusion proof for one entry against a checkpoint.
    Prove {
        /// Entry index, zero-based.
        #[arg(long)]
        index: u64,
        /// Checkpoint size to prove against; defaults to the current size.
        #[arg(long)]
        tree_size: Option<u64>,
    },
    /// Consistency proof showing one checkpoint extends another.
    Consistency {
        #[arg(long)]
        old_size: u64,
        /// Defaults to the current size.
        #[arg(long)]
        new_size: Option<u64>,
    },
    /// Signed checkpoint of the current tree.
    Checkpoint,
    /// Replay the entry stream and re-verify every stored checkpoint.
    Audit,
}

#[derive(Args)]
struct BenchCmd {
    #[command(subcommand)]
    which: BenchWhich,
}

#[derive(Subcommand)]
enum BenchWhich {
    /// Time naive and chunked hashing across input sizes.
    Hash {
        /// Comma-separated input sizes; KiB/MiB/GiB suffixes accepted.
        #[arg(long, required = true, value_delimiter = ',', value_parser = parse_size)]
        sizes: Vec<u64>,
        #[arg(long, default_value = "sha256")]
        alg: HashAlg,
        #[arg(long, default_value = "8MiB", value_parser = parse_size)]
        chunk_size: u64,
        /// Timed runs per size; the report carries the median.
        #[arg(long, default_value_t = bench::MIN_HASH_RUNS)]
        runs: u32,
        /// Directory for synthetic inputs; they are removed after timing.
        #[arg(long, default_value = ".")]
        work_dir: PathBuf,
        /// Write CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Pin the worker-thread count; recorded in the CSV header.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Time set commitment and query operations across set sizes.
    Zks {
        /// Comma-separated set sizes.
        #[arg(long, required = true, value_delimiter = ',', value_parser = parse_size)]
        sizes: Vec<u64>,
        #[arg(long, default_value_t = zks::DEFAULT_LAMBDA_BITS)]
        lambda: u32,
        #[arg(long, default_value_t = bench::MIN_ZKS_RUNS)]
        runs: u32,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
}

enum CliError {
    /// Well-formed input that fails verification. Exit 1.
    Reject { code: &'static str, detail: String },
    /// Bad argument values beyond what clap catches. Exit 2.
    Usage(String),
    /// Filesystem trouble. Exit 3.
    Io(String),
    /// Unparseable or inconsistent input data. Exit 4.
    Format(String),
    /// A broken invariant on our side. Exit 5.
    Internal(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Reject { .. } => 1,
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Format(_) => 4,
            CliError::Internal(_) => 5,
        }
    }

    fn reason(&self) -> &str {
        match self {
            CliError::Reject { code, .. } => code,
            CliError::Usage(_) => "usage",
            CliError::Io(_) => "io",
            CliError::Format(_) => "format",
            CliError::Internal(_) => "internal",
        }
    }

    fn detail(&self) -> &str {
        match self {
            CliError::Reject { detail, .. } => detail,
            CliError::Usage(d) | CliError::Io(d) | CliError::Format(d) | CliError::Internal(d) => d,
        }
    }
}

fn io_at(path: &Path, e: std::io::Error) -> CliError {
    // InvalidData means the file was read but its bytes are wrong (non-UTF-8
    // text): a malformed input, not filesystem trouble.
    let msg = format!("{}: {e}", path.display());
    match e.kind() {
        std::io::ErrorKind::InvalidData => CliError::Format(msg),
        _ => CliError::Io(msg),
    }
}

impl From<HashError> for CliError {
    fn from(e: HashError) -> CliError {
        match e {
            HashError::Io { .. } => CliError::Io(e.to_string()),
            HashError::ZeroChunkSize => CliError::Usage(e.to_string()),
            _ => CliError::Format(e.to_string()),
        }
    }
}

impl From<LogError> for CliError {
    fn from(e: LogError) -> CliError {
        match e {
            LogError::Io { .. } => CliError::Io(e.to_string()),
            LogError::OutOfRange { .. } => CliError::Usage(e.to_string()),
            LogError::Malformed(_) | LogError::Codec(_) => CliError::Format(e.to_string()),
        }
    }
}

impl From<ZksError> for CliError {
    fn from(e: ZksError) -> CliError {
        match e {
            ZksError::LambdaTooSmall => CliError::Usage(e.to_string()),
            // A key collision means a SHA-256 collision between VRF outputs.
            ZksError::KeyCollision => CliError::Internal(e.to_string()),
            _ => CliError::Format(e.to_string()),
        }
    }
}

impl From<SignError> for CliError {
    fn from(e: SignError) -> CliError {
        match e {
            SignError::Hash(e) => e.into(),
            // The CLI mints token and certificate at the same instant, so a
            // CA refusal cannot be user error.
            SignError::Ca(e) => CliError::Internal(e.to_string()),
            SignError::Log(e) => e.into(),
            SignError::Io { .. } => CliError::Io(e.to_string()),
        }
    }
}

impl From<VerifyError> for CliError {
    fn from(e: VerifyError) -> CliError {
        match e {
            VerifyError::Malformed(_) => CliError::Format(e.to_string()),
            VerifyError::Hash(HashError::Io { .. }) => CliError::Io(e.to_string()),
            VerifyError::Hash(_) => CliError::Format(e.to_string()),
            _ => CliError::Reject { code: e.code(), detail: e.to_string() },
        }
    }
}

/// Parses "4096", "64KiB", "8MiB", "1GiB" (binary multiples).
fn parse_size(s: &str) -> Result<u64, String> {
    let t = s.trim();
    let (num, shift) = if let Some(n) = t.strip_suffix("GiB") {
        (n, 30)
    } else if let Some(n) = t.strip_suffix("MiB") {
        (n, 20)
    } else if let Some(n) = t.strip_suffix("KiB") {
        (n, 10)
    } else if let Some(n) = t.strip_suffix('G') {
        (n, 30)
    } else if let Some(n) = t.strip_suffix('M') {
        (n, 20)
    } else if let Some(n) = t.strip_suffix('K') {
        (n, 10)
    } else if let Some(n) = t.strip_suffix('B') {
        (n, 0)
    } else {
        (t, 0)
    };
    let base: u64 = num.trim().parse().map_err(|_| format!("bad size: {s}"))?;
    base.checked_shl(shift).filter(|v| v >> shift == base).ok_or(format!("size overflows: {s}"))
}

fn params_for(alg: HashAlg, scheme: HashScheme, chunk_size: u64) -> Result<HashParams, CliError> {
    if chunk_size == 0 {
        return Err(CliError::Usage("chunk size must be nonzero".to_string()));
    }
    Ok(match scheme {
        HashScheme::Naive => HashParams::naive(alg),
        HashScheme::Chunked => HashParams::chunked(alg, chunk_size),
    })
}

fn kind_name(kind: ArtifactKind) -> &'static str {
    match kind {
        ArtifactKind::File => "file",
        ArtifactKind::Directory => "directory",
    }
}

fn emit(json_mode: bool, value: serde_json::Value, human: String) {
    if json_mode {
        println!("{}", serde_json::to_string_pretty(&value).expect("json output"));
    } else {
        print!("{human}");
    }
}

fn main() {
    let cli = Cli::parse();
    let json_mode = cli.json;
    if let Err(e) = run(cli) {
        if json_mode {
            let v = json!({ "ok": false, "reason": e.reason(), "detail": e.detail() });
            println!("{}", serde_json::to_string_pretty(&v).expect("json output"));
        } else if matches!(e, CliError::Reject { .. }) {
            // A rejection is a result, not a malfunction: report on stdout.
            println!("rejected: {}: {}", e.reason(), e.detail());
        } else {
            eprintln!("error: {}", e.detail());
        }
        std::process::exit(e.exit_code());
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let json = cli.json;
    match cli.command {
        Command::Hash(c) => cmd_hash(json, c),
        Command::Sign(c) => cmd_sign(json, c),
        Command::Verify(c) => cmd_verify(json, c),
        Command::ZksCommit(c) => cmd_zks_commit(json, c),
        Command::ZksProve(c) => cmd_zks_prove(json, c),
        Command::ZksVerify(c) => cmd_zks_verify(json, c),
        Command::Log(c) => cmd_log(json, c),
        Command::Bench(c) => cmd_bench(json, c),
    }
}

fn cmd_hash(json: bool, c: HashCmd) -> Result<(), CliError> {
    let params = params_for(c.alg, c.scheme, c.chunk_size)?;
    let hashed = model_hash::hash_model(&c.path, params)?;
    let d = &hashed.digest;

    let mut human = format!("kind: {}\nalg: {}\nscheme: {}\n", kind_name(d.kind), d.alg, d.scheme);
    if let Some(cs) = d.chunk_size {
        human.push_str(&format!("chunk-size: {cs}\n"));
    }
    if let Some(m) = &hashed.manifest {
        human.push_str(&format!("files: {}\n", m.entries.len()));
        if c.manifest {
            for e in &m.entries {
                human.push_str(&format!("{}\t{}\t{}\n", e.path, e.size, e.digest));
            }
        }
    }
    human.push_str(&format!("digest: {}\n", d.digest));

    let mut value = json!({ "ok": true, "digest": d });
    if let Some(m) = &hashed.manifest {
        value["files"] = json!(m.entries.len());
        if c.manifest {
            value["manifest"] = json!(m.entries);
        }
    }
    emit(json, value, human);
    Ok(())
}

fn read_secret(path: &Path) -> Result<Option<[u8; 32]>, CliError> {
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(path).map_err(|e| io_at(path, e))?;
    let bytes: [u8; 32] = hex::decode(text.trim())
        .ok()
        .and_then(|b| b.try_into().ok())
        .ok_or_else(|| CliError::Format(format!("bad key file: {}", path.display())))?;
    Ok(Some(bytes))
}

fn write_secret(path: &Path, bytes: &[u8; 32]) -> Result<(), CliError> {
    fs::write(path, format!("{}\n", hex::encode(bytes))).map_err(|e| io_at(path, e))
}

/// Loads or creates provider, CA, and log state under `dir`, and refreshes
/// the verifier-side trust roots file (it is derived from the keys).
fn open_services(dir: &Path) -> Result<SigningService, CliError> {
    fs::create_dir_all(dir).map_err(|e| io_at(dir, e))?;
    let provider_path = dir.join(PROVIDER_KEY_FILE);
    let provider = match read_secret(&provider_path)? {
        Some(b) => IdentityProvider::from_secret_bytes(&b).ok_or_else(|| {
            CliError::Format(format!("bad provider key: {}", provider_path.display()))
        })?,
        None => {
            let p = IdentityProvider::new();
            write_secret(&provider_path, &p.secret_bytes())?;
            p
        }
    };
    let ca_path = dir.join(CA_KEY_FILE);
    let ca = match read_secret(&ca_path)? {
        Some(b) => CertificateAuthority::from_secret_bytes(&b, provider.public_key())
            .ok_or_else(|| CliError::Format(format!("bad CA key: {}", ca_path.display())))?,
        None => {
            let ca = CertificateAuthority::new(provider.public_key());
            write_secret(&ca_path, &ca.secret_bytes())?;
            ca
        }
    };
    let log = TransparencyLog::open_or_create(&dir.join(LOG_DIR))?;
    let svc = SigningService { provider, ca, log };
    let roots_path = dir.join(TRUST_ROOTS_FILE);
    let mut roots_json = svc.trust_roots().to_json();
    roots_json.push('\n');
    fs::write(&roots_path, roots_json).map_err(|e| io_at(&roots_path, e))?;
    Ok(svc)
}

fn cmd_sign(json: bool, c: SignCmd) -> Result<(), CliError> {
    let svc = open_services(&c.state_dir)?;
    let params = params_for(c.alg, c.scheme, c.chunk_size)?;
    let bundle = svc.sign(&c.path, &c.identity, params, None)?;
    let out = c.output.unwrap_or_else(|| default_bundle_path(&c.path));
    bundle.write_to(&out).map_err(|e| io_at(&out, e))?;
    let roots_path = c.state_dir.join(TRUST_ROOTS_FILE);

    let human = format!(
        "signed: {}\ndigest: {}\nlog-index: {}\nlog-size: {}\nbundle: {}\ntrust-roots: {}\n",
        bundle.identity,
        bundle.digest.digest,
        bundle.log_index,
        bundle.log_checkpoint.tree_size,
        out.display(),
        roots_path.display(),
    );
    let value = json!({
        "ok": true,
        "identity": bundle.identity,
        "digest": bundle.digest,
        "log_index": bundle.log_index,
        "log_size": bundle.log_checkpoint.tree_size,
        "bundle": out.display().to_string(),
        "trust_roots": roots_path.display().to_string(),
    });
    emit(json, value, human);
    Ok(())
}

fn cmd_verify(json: bool, c: VerifyCmd) -> Result<(), CliError> {
    let roots_text = fs::read_to_string(&c.trust_roots).map_err(|e| io_at(&c.trust_roots, e))?;
    let roots = TrustRoots::from_json(&roots_text).map_err(CliError::Format)?;
    let bundle_path = c.bundle.unwrap_or_else(|| default_bundle_path(&c.path));
    let bundle_text = fs::read_to_string(&bundle_path).map_err(|e| io_at(&bundle_path, e))?;
    let bundle = SignatureBundle::from_json(&bundle_text)?;
    verify_model(&c.path, &bundle, &roots)?;

    let human = format!(
        "ok: {} signed by {} at {}, log index {} of {}\n",
        bundle.digest.digest,
        bundle.identity,
        bundle.signed_at,
        bundle.log_index,
        bundle.log_checkpoint.tree_size,
    );
    let value = json!({
        "ok": true,
        "identity": bundle.identity,
        "signed_at": bundle.signed_at,
        "digest": bundle.digest,
        "log_index": bundle.log_index,
        "log_size": bundle.log_checkpoint.tree_size,
    });
    emit(json, value, human);
    Ok(())
}

/// Elements from a list file (line bytes) and/or a directory (per-file
/// SHA-256), in listing order then sorted directory order.
fn collect_elements(list: Option<&Path>, dir: Option<&Path>) -> Result<Vec<Vec<u8>>, CliError> {
    let mut elements = Vec::new();
    if let Some(list) = list {
        let text = fs::read_to_string(list).map_err(|e| io_at(list, e))?;
        for line in text.lines() {
            if !line.is_empty() {
                elements.push(line.as_bytes().to_vec());
            }
        }
    }
    if let Some(dir) = dir {
        for entry in walkdir::WalkDir::new(dir).follow_links(false).sort_by_file_name() {
            let entry =
                entry.map_err(|e| CliError::Io(format!("walking {}: {e}", dir.display())))?;
            if entry.file_type().is_file() {
                elements
                    .push(zks::element_for_file(entry.path()).map_err(|e| io_at(entry.path(), e))?);
            }
        }
    }
    if elements.is_empty() {
        return Err(CliError::Usage("no elements found in --list/--dir inputs".to_string()));
    }
    Ok(elements)
}

fn element_bytes(element: Option<&str>, file: Option<&Path>) -> Result<Vec<u8>, CliError> {
    match (element, file) {
        (Some(s), None) => Ok(s.as_bytes().to_vec()),
        (None, Some(p)) => zks::element_for_file(p).map_err(|e| io_at(p, e)),
        _ => unreachable!("clap enforces exactly one element source"),
    }
}

fn cmd_zks_commit(json: bool, c: ZksCommitCmd) -> Result<(), CliError> {
    let elements = collect_elements(c.list.as_deref(), c.dir.as_deref())?;
    let (state, commitment) = zks::commit(&elements, c.lambda, &mut OsRng)?;
    fs::write(&c.state, state.to_bytes()).map_err(|e| io_at(&c.state, e))?;
    fs::write(&c.commitment, commitment.to_text()).map_err(|e| io_at(&c.commitment, e))?;

    let human = format!(
        "committed: {} elements\nroot: {}\npk: {}\nstate: {} (secret)\ncommitment: {}\n",
        commitment.com.n,
        commitment.com.root,
        hex::encode(commitment.pk.to_bytes()),
        c.state.display(),
        c.commitment.display(),
    );
    let value = json!({
        "ok": true,
        "n": commitment.com.n,
        "root": commitment.com.root,
        "pk": hex::encode(commitment.pk.to_bytes()),
        "state": c.state.display().to_string(),
        "commitment": c.commitment.display().to_string(),
    });
    emit(json, value, human);
    Ok(())
}

fn cmd_zks_prove(json: bool, c: ZksProveCmd) -> Result<(), CliError> {
    let bytes = fs::read(&c.state).map_err(|e| io_at(&c.state, e))?;
    let state = ZksState::from_bytes(&bytes)?;
    let element = element_bytes(c.element.as_deref(), c.element_file.as_deref())?;
    let (resp, proof) = zks::query(&state, &element, &mut OsRng);
    fs::write(&c.output, proof.to_bytes(resp)).map_err(|e| io_at(&c.output, e))?;

    let name = match resp {
        ZksResponse::Member => "member",
        ZksResponse::NonMember => "non-member",
    };
    let human = format!("response: {name}\nproof: {}\n", c.output.display());
    let value = json!({
        "ok": true,
        "resp": resp.as_bit(),
        "response": name,
        "proof": c.output.display().to_string(),
    });
    emit(json, value, human);
    Ok(())
}

fn cmd_zks_verify(json: bool, c: ZksVerifyCmd) -> Result<(), CliError> {
    let text = fs::read_to_string(&c.commitment).map_err(|e| io_at(&c.commitment, e))?;
    let commitment = ZksCommitment::from_text(&text)?;
    let element = element_bytes(c.element.as_deref(), c.element_file.as_deref())?;
    let bytes = fs::read(&c.proof).map_err(|e| io_at(&c.proof, e))?;
    let (resp, proof) = ZksQueryProof::from_bytes(&bytes)?;
    if !zks::verify(&commitment, &element, resp, &proof) {
        return Err(CliError::Reject {
            code: "zks-proof-invalid",
            detail: "proof does not verify against the commitment".to_string(),
        });
    }

    // A verified non-member proof is a success: the answer is "not in the
    // set", delivered with evidence.
    let name = match resp {
        ZksResponse::Member => "member",
        ZksResponse::NonMember => "non-member",
    };
    let human = format!("ok: verified, response: {name} (resp={})\n", resp.as_bit());
    let value = json!({ "ok": true, "resp": resp.as_bit(), "response": name });
    emit(json, value, human);
    Ok(())
}

fn cmd_log(json: bool, c: LogCmd) -> Result<(), CliError> {
    let log = TransparencyLog::open_or_create(&c.dir)?;
    match c.action {
        LogAction::Append { payload, payload_file } => {
            let payload = match (payload, payload_file) {
                (Some(s), None) => s.into_bytes(),
                (None, Some(p)) => fs::read(&p).map_err(|e| io_at(&p, e))?,
                _ => unreachable!("clap enforces exactly one payload source"),
            };
            let (index, cp) = log.append(&payload)?;
            let human = format!("index: {index}\ncheckpoint:\n{}", cp.to_text());
            let value = json!({
                "ok": true,
                "index": index,
                "tree_size": cp.tree_size,
                "root": cp.root,
                "checkpoint": cp.to_text(),
            });
            emit(json, value, human);
        }
        LogAction::Prove { index, tree_size } => {
            let size = tree_size.unwrap_or_else(|| log.len());
            let proof = log.prove_inclusion(index, size)?;
            let cp = log.checkpoint_at(size)?;
            let payload = log
                .entry(index)
                .ok_or_else(|| CliError::Internal("entry vanished during prove".to_string()))?;
            if !translog::verify_inclusion(&cp, &translog::leaf_hash(&payload), &proof) {
                return Err(CliError::Internal("generated proof failed self-check".to_string()));
            }
            let proof_b64 = b64(&proof.to_bytes());
            let human = format!(
                "leaf-index: {index}\ntree-size: {size}\nproof: {proof_b64}\ncheckpoint:\n{}",
                cp.to_text()
            );
            let value = json!({
                "ok": true,
                "leaf_index": index,
                "tree_size": size,
                "proof": proof_b64,
                "checkpoint": cp.to_text(),
            });
            emit(json, value, human);
        }
        LogAction::Consistency { old_size, new_size } => {
            let new_size = new_size.unwrap_or_else(|| log.len());
            let proof = log.prove_consistency(old_size, new_size)?;
            let old_cp = log.checkpoint_at(old_size)?;
            let new_cp = log.checkpoint_at(new_size)?;
            if !translog::verify_consistency(&old_cp, &new_cp, &proof) {
                return Err(CliError::Internal("generated proof failed self-check".to_string()));
            }
            let proof_b64 = b64(&proof.to_bytes());
            let human = format!(
                "old-size: {old_size}\nnew-size: {new_size}\nproof: {proof_b64}\nold-checkpoint:\n{}new-checkpoint:\n{}",
                old_cp.to_text(),
                new_cp.to_text()
            );
            let value = json!({
                "ok": true,
                "old_size": old_size,
                "new_size": new_size,
                "proof": proof_b64,
                "old_checkpoint": old_cp.to_text(),
                "new_checkpoint": new_cp.to_text(),
            });
            emit(json, value, human);
        }
        LogAction::Checkpoint => {
            let cp = log.checkpoint();
            let value = json!({
                "ok": true,
                "tree_size": cp.tree_size,
                "root": cp.root,
                "checkpoint": cp.to_text(),
            });
            emit(json, value, cp.to_text());
        }
        LogAction::Audit => {
            // A failed audit is a verification verdict on the stored log.
            let report = log.audit().map_err(|e| CliError::Reject {
                code: "log-audit-failed",
                detail: e.to_string(),
            })?;
            let human = format!(
                "ok: audited {} entries, {} checkpoints\n",
                report.entries, report.checkpoints
            );
            let value =
                json!({ "ok": true, "entries": report.entries, "checkpoints": report.checkpoints });
            emit(json, value, human);
        }
    }
    Ok(())
}

fn b64(bytes: &[u8]) -> String {
    // Matches the bundle encoding without pulling the base64 crate in here.
    const ALPHABET: &[u8; 64] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    let mut out = String::with_capacity(bytes.len().div_ceil(3) * 4);
    for chunk in bytes.chunks(3) {
        let b = [chunk[0], *chunk.get(1).unwrap_or(&0), *chunk.get(2).unwrap_or(&0)];
        let v = ((b[0] as u32) << 16) | ((b[1] as u32) << 8) | b[2] as u32;
        for i in 0..4 {
            if i <= chunk.len() {
                out.push(ALPHABET[((v >> (18 - 6 * i)) & 63) as usize] as char);
            } else {
                out.push('=');
            }
        }
    }
    out
}

/// Builds the global worker pool when --workers is given; returns the
/// effective count for the CSV header.
fn pin_workers(workers: Option<usize>) -> Result<usize, CliError> {
    match workers {
        Some(0) => Err(CliError::Usage("--workers must be at least 1".to_string())),
        Some(n) => {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| CliError::Usage(format!("cannot pin worker count: {e}")))?;
            Ok(n)
        }
        None => Ok(rayon::current_num_threads()),
    }
}

fn write_bench_output(
    json: bool,
    records: &[bench::BenchRecord],
    meta: &[(&str, String)],
    out: Option<&Path>,
) -> Result<(), CliError> {
    for r in records {
        if !r.note.is_empty() {
            eprintln!("warning: {} {} at {} skipped: {}", r.experiment, r.operation, r.param, r.note);
        }
    }
    let csv = bench::to_csv(records, meta);
    if let Some(path) = out {
        fs::write(path, &csv).map_err(|e| io_at(path, e))?;
        let human = format!("wrote {} rows to {}\n", records.len(), path.display());
        let value =
            json!({ "ok": true, "rows": records.len(), "out": path.display().to_string() });
        emit(json, value, human);
    } else if json {
        let rows: Vec<serde_json::Value> = records
            .iter()
            .map(|r| {
                json!({
                    "experiment": r.experiment,
                    "operation": r.operation,
                    "param": r.param,
                    "runs": r.runs,
                    "median_seconds": r.median_secs,
                    "fingerprint": r.fingerprint,
                    "note": r.note,
                })
            })
            .collect();
        let meta_obj: serde_json::Map<String, serde_json::Value> =
            meta.iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
        emit(json, json!({ "ok": true, "meta": meta_obj, "records": rows }), String::new());
    } else {
        print!("{csv}");
    }
    Ok(())
}

fn cmd_bench(json: bool, c: BenchCmd) -> Result<(), CliError> {
    match c.which {
        BenchWhich::Hash { sizes, alg, chunk_size, runs, work_dir, out, workers } => {
            if let Some(&too_big) = sizes.iter().find(|&&s| s > BENCH_MAX_FILE) {
                return Err(CliError::Usage(format!(
                    "size {too_big} exceeds the 4 GiB bench cap"
                )));
            }
            if chunk_size == 0 {
                return Err(CliError::Usage("chunk size must be nonzero".to_string()));
            }
            let workers = pin_workers(workers)?;
            let records = bench::bench_hash(&work_dir, &sizes, alg, chunk_size, runs)
                .map_err(|e| CliError::Io(format!("bench inputs: {e}")))?;
            let meta = [
                ("workers", workers.to_string()),
                ("alg", alg.to_string()),
                ("chunk_size", chunk_size.to_string()),
            ];
            write_bench_output(json, &records, &meta, out.as_deref())
        }
        BenchWhich::Zks { sizes, lambda, runs, out, workers } => {
            if let Some(&too_big) = sizes.iter().find(|&&s| s > BENCH_MAX_SET) {
                return Err(CliError::Usage(format!(
                    "set size {too_big} exceeds the 1000000-entry bench cap"
                )));
            }
            let workers = pin_workers(workers)?;
            let records = bench::bench_zks(&sizes, lambda, runs);
            let meta = [("workers", workers.to_string()), ("lambda", lambda.to_string())];
            write_bench_output(json, &records, &meta, out.as_deref())
        }
    }
}
