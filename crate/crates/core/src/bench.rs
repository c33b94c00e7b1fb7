//! Measurement helpers behind the `bench` CLI subcommands and the
//! performance tests: synthetic inputs, medians, a log-log slope fit, and a
//! versioned CSV record format.
//!
//! Timings here are medians over repeated runs. Hashing operations run at
//! least five times, set-commitment operations at least ten; callers can
//! raise the counts, never lower them. Every proof produced while timing is
//! also verified, so a benchmark cannot silently measure garbage.

use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use rand::rngs::OsRng;

use crate::digest::HashAlg;
use crate::model_hash::{self, HashParams};
use crate::zks::{self, ZksResponse};

pub const BENCH_CSV_VERSION: &str = "# modelseal-bench/v1";
pub const MIN_HASH_RUNS: u32 = 5;
pub const MIN_ZKS_RUNS: u32 = 10;

/// Refuse set sizes that would not fit comfortably in memory.
pub const MAX_BENCH_SET: u64 = 10_000_000;

/// One benchmark measurement. `param` is the input size in bytes for
/// hashing and the set size for set commitments. `fingerprint` carries the
/// digest or root the timed runs produced, so a timing run doubles as a
/// correctness run. A nonempty `note` means the row is a skip marker, not a
/// measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub experiment: String,
    pub operation: String,
    pub param: u64,
    pub runs: u32,
    pub median_secs: f64,
    pub fingerprint: String,
    pub note: String,
}

/// Versioned CSV. `meta` lines record run conditions (worker count and the
/// like) as `# key=value` comments after the version line.
pub fn to_csv(records: &[BenchRecord], meta: &[(&str, String)]) -> String {
    let mut out = String::new();
    out.push_str(BENCH_CSV_VERSION);
    out.push('\n');
    for (k, v) in meta {
        out.push_str(&format!("# {k}={v}\n"));
    }
    out.push_str("experiment,operation,param,runs,median_seconds,fingerprint,note\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{:.9},{},{}\n",
            r.experiment, r.operation, r.param, r.runs, r.median_secs, r.fingerprint, r.note
        ));
    }
    out
}

/// Median of the samples. Even counts average the middle pair.
pub fn median(samples: &[f64]) -> f64 {
    assert!(!samples.is_empty(), "median of no samples");
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("no NaN timings"));
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    }
}

/// Least-squares slope of ln(y) against ln(x). A linear-time operation
/// plotted this way has slope one.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    assert!(points.len() >= 2, "slope needs at least two points");
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let sx: f64 = logs.iter().map(|p| p.0).sum();
    let sy: f64 = logs.iter().map(|p| p.1).sum();
    let sxx: f64 = logs.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = logs.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Writes `size` bytes of fast deterministic noise. Content depends only on
/// (size, seed), so runs are reproducible without storing fixtures.
pub fn write_synth_file(path: &Path, size: u64, seed: u64) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    let mut state = seed ^ 0x9e3779b97f4a7c15;
    if state == 0 {
        state = 1;
    }
    let mut buf = vec![0u8; 64 * 1024];
    let mut remaining = size;
    while remaining > 0 {
        for word in buf.chunks_exact_mut(8) {
            // xorshift64*: cheap enough that generation never dominates.
            state ^= state >> 12;
            state ^= state << 25;
            state ^= state >> 27;
            let v = state.wrapping_mul(0x2545f4914f6cdd1d);
            word.copy_from_slice(&v.to_le_bytes());
        }
        let take = remaining.min(buf.len() as u64) as usize;
        f.write_all(&buf[..take])?;
        remaining -= take as u64;
    }
    f.flush()
}

fn time_secs(mut f: impl FnMut()) -> f64 {
    let start = Instant::now();
    f();
    start.elapsed().as_secs_f64()
}

/// Times naive and chunked hashing of synthetic files at each size. Files
/// are created in `work_dir` and removed as soon as their size is done; a
/// size whose input cannot be created becomes a skip row, not an error.
pub fn bench_hash(
    work_dir: &Path,
    sizes: &[u64],
    alg: HashAlg,
    chunk_size: u64,
    runs: u32,
) -> std::io::Result<Vec<BenchRecord>> {
    let runs = runs.max(MIN_HASH_RUNS);
    let mut records = Vec::new();
    for (i, &size) in sizes.iter().enumerate() {
        let path = work_dir.join(format!("bench-{size}.bin"));
        if let Err(e) = write_synth_file(&path, size, 0x5eed_0000 + i as u64) {
            let _ = std::fs::remove_file(&path);
            for op in ["hash-naive", "hash-chunked"] {
                records.push(BenchRecord {
                    experiment: "hash".to_string(),
                    operation: op.to_string(),
                    param: size,
                    runs: 0,
                    median_secs: f64::NAN,
                    fingerprint: String::new(),
                    note: format!("skipped: cannot create input ({e})"),
                });
            }
            continue;
        }
        let naive = HashParams::naive(alg);
        let chunked = HashParams::chunked(alg, chunk_size);
        // Consistency gate: the engineered path must agree with its
        // sequential twin before any timing is recorded.
        let chunked_ref =
            model_hash::hash_file_sequential(&path, chunked).expect("fresh input is hashable");
        let mut ops: [(&str, HashParams, Vec<f64>, Option<crate::digest::Digest>); 2] = [
            ("hash-naive", naive, Vec::new(), None),
            ("hash-chunked", chunked, Vec::new(), None),
        ];
        for _ in 0..runs {
            for (name, params, samples, seen) in ops.iter_mut() {
                let mut digest = None;
                samples.push(time_secs(|| {
                    digest = Some(model_hash::hash_file(&path, *params).unwrap());
                }));
                let digest = digest.unwrap();
                if *name == "hash-chunked" {
                    assert_eq!(digest, chunked_ref, "chunked digest unstable at {size} bytes");
                }
                if let Some(prev) = seen {
                    assert_eq!(*prev, digest, "{name} digest unstable at {size} bytes");
                }
                *seen = Some(digest);
            }
        }
        for (name, _, samples, seen) in ops {
            records.push(BenchRecord {
                experiment: "hash".to_string(),
                operation: name.to_string(),
                param: size,
                runs,
                median_secs: median(&samples),
                fingerprint: seen.expect("at least one run").to_hex(),
                note: String::new(),
            });
        }
        std::fs::remove_file(&path)?;
    }
    Ok(records)
}

fn bench_elements(n: u64) -> Vec<Vec<u8>> {
    (0..n).map(|i| format!("element-{i}").into_bytes()).collect()
}

/// Times commit, prove, and verify for set commitments at each set size.
/// Proofs produced during timing are verified afterwards; a verification
/// failure is a panic, not a row.
pub fn bench_zks(sizes: &[u64], lambda_bits: u32, runs: u32) -> Vec<BenchRecord> {
    let runs = runs.max(MIN_ZKS_RUNS);
    let mut records = Vec::new();
    for &n in sizes {
        if n == 0 || n > MAX_BENCH_SET {
            for op in [
                "zks-commit",
                "zks-prove-inclusion",
                "zks-verify-inclusion",
                "zks-prove-non-inclusion",
                "zks-verify-non-inclusion",
            ] {
                records.push(BenchRecord {
                    experiment: "zks".to_string(),
                    operation: op.to_string(),
                    param: n,
                    runs: 0,
                    median_secs: f64::NAN,
                    fingerprint: String::new(),
                    note: format!("skipped: set size must be in 1..={MAX_BENCH_SET}"),
                });
            }
            continue;
        }
        let elements = bench_elements(n);
        let mut commit_samples = Vec::new();
        let mut last = None;
        for _ in 0..runs {
            let mut out = None;
            commit_samples.push(time_secs(|| {
                out = Some(zks::commit(&elements, lambda_bits, &mut OsRng).unwrap());
            }));
            last = out;
        }
        let (state, com) = last.expect("at least one commit run");
        let fingerprint = com.com.root.to_hex();
        records.push(BenchRecord {
            experiment: "zks".to_string(),
            operation: "zks-commit".to_string(),
            param: n,
            runs,
            median_secs: median(&commit_samples),
            fingerprint: fingerprint.clone(),
            note: String::new(),
        });

        let mut prove_in = Vec::new();
        let mut verify_in = Vec::new();
        let mut prove_out = Vec::new();
        let mut verify_out = Vec::new();
        for run in 0..runs {
            let member = &elements[(run as usize * 7919) % elements.len()];
            let mut produced = None;
            prove_in.push(time_secs(|| {
                produced = Some(zks::query(&state, member, &mut OsRng));
            }));
            let (resp, proof) = produced.unwrap();
            assert_eq!(resp, ZksResponse::Member);
            let mut ok = false;
            verify_in.push(time_secs(|| {
                ok = zks::verify(&com, member, resp, &proof);
            }));
            assert!(ok, "member proof failed verification at n={n}");

            let absent = format!("absent-{run}").into_bytes();
            let mut produced = None;
            prove_out.push(time_secs(|| {
                produced = Some(zks::query(&state, &absent, &mut OsRng));
            }));
            let (resp, proof) = produced.unwrap();
            assert_eq!(resp, ZksResponse::NonMember);
            let mut ok = false;
            verify_out.push(time_secs(|| {
                ok = zks::verify(&com, &absent, resp, &proof);
            }));
            assert!(ok, "non-member proof failed verification at n={n}");
        }
        for (op, samples) in [
            ("zks-prove-inclusion", prove_in),
            ("zks-verify-inclusion", verify_in),
            ("zks-prove-non-inclusion", prove_out),
            ("zks-verify-non-inclusion", verify_out),
        ] {
            records.push(BenchRecord {
                experiment: "zks".to_string(),
                operation: op.to_string(),
                param: n,
                runs,
                median_secs: median(&samples),
                fingerprint: fingerprint.clone(),
                note: String::new(),
            });
        }
    }
    records
}
