//! End-to-end tests of the installed binary: flows, output shapes, and the
//! exit-code contract (0 accept, 1 reject, 2 usage, 3 io, 4 format).

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_modelseal");

fn run(args: &[&str], cwd: &Path) -> Output {
    Command::new(BIN).args(args).current_dir(cwd).output().expect("spawn modelseal")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn assert_code(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "wrong exit code\nstdout: {}\nstderr: {}",
        stdout(out),
        stderr(out)
    );
}

#[test]
fn hash_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.bin");
    fs::write(&model, b"some weights").unwrap();

    let out = run(&["hash", "model.bin", "--scheme", "naive"], dir.path());
    assert_code(&out, 0);
    let expected = modelseal::model_hash::hash_model(
        &model,
        modelseal::model_hash::HashParams::naive(modelseal::digest::HashAlg::Sha256),
    )
    .unwrap();
    assert!(stdout(&out).contains(&format!("digest: {}", expected.digest.digest)));

    let out = run(&["hash", "model.bin", "--chunk-size", "4B"], dir.path());
    assert_code(&out, 0);
    let expected = modelseal::model_hash::hash_model(
        &model,
        modelseal::model_hash::HashParams::chunked(modelseal::digest::HashAlg::Sha256, 4),
    )
    .unwrap();
    assert!(stdout(&out).contains(&format!("digest: {}", expected.digest.digest)));
    assert!(stdout(&out).contains("chunk-size: 4"));
}

#[test]
fn hash_directory_lists_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model");
    fs::create_dir(&model).unwrap();
    fs::write(model.join("a.bin"), b"aaa").unwrap();
    fs::write(model.join("b.bin"), b"bbb").unwrap();

    let out = run(&["hash", "model", "--manifest"], dir.path());
    assert_code(&out, 0);
    let text = stdout(&out);
    assert!(text.contains("kind: directory"));
    assert!(text.contains("files: 2"));
    assert!(text.contains("a.bin\t3\t"));
}

#[test]
fn sign_verify_round_trip_and_tamper() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("model.bin"), b"weights v1").unwrap();

    let out = run(
        &["sign", "model.bin", "--identity", "ci@example.com", "--state-dir", "state"],
        dir.path(),
    );
    assert_code(&out, 0);
    assert!(stdout(&out).contains("log-index: 0"));
    assert!(dir.path().join("model.bin.sig").exists());

    let roots = "state/trust_roots.json";
    let out = run(&["verify", "model.bin", "--trust-roots", roots], dir.path());
    assert_code(&out, 0);
    assert!(stdout(&out).contains("ci@example.com"));

    // Same state signs again: the log grows, verification still passes.
    let out = run(
        &["sign", "model.bin", "--identity", "ci@example.com", "--state-dir", "state"],
        dir.path(),
    );
    assert_code(&out, 0);
    assert!(stdout(&out).contains("log-index: 1"));

    fs::write(dir.path().join("model.bin"), b"weights v2").unwrap();
    let out = run(&["verify", "model.bin", "--trust-roots", roots], dir.path());
    assert_code(&out, 1);
    assert!(stdout(&out).contains("digest-mismatch"));
}

#[test]
fn verify_under_foreign_roots_rejects() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("model.bin"), b"weights").unwrap();

    let out = run(
        &["sign", "model.bin", "--identity", "a@example.com", "--state-dir", "state-a"],
        dir.path(),
    );
    assert_code(&out, 0);
    // A second state directory has unrelated keys.
    fs::write(dir.path().join("other.bin"), b"other").unwrap();
    let out = run(
        &["sign", "other.bin", "--identity", "b@example.com", "--state-dir", "state-b"],
        dir.path(),
    );
    assert_code(&out, 0);

    let out =
        run(&["verify", "model.bin", "--trust-roots", "state-b/trust_roots.json"], dir.path());
    assert_code(&out, 1);
    assert!(stdout(&out).contains("certificate-invalid"));
}

#[test]
fn zks_flow_member_and_non_member() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("elems.txt"), "alpha\nbeta\ngamma\n").unwrap();

    let out = run(
        &["zks-commit", "--list", "elems.txt", "--state", "s.bin", "--commitment", "c.txt"],
        dir.path(),
    );
    assert_code(&out, 0);
    assert!(stdout(&out).contains("committed: 3 elements"));

    let out = run(
        &["zks-prove", "--state", "s.bin", "--element", "beta", "--output", "beta.proof"],
        dir.path(),
    );
    assert_code(&out, 0);
    assert!(stdout(&out).contains("response: member"));

    let out = run(
        &["zks-verify", "--commitment", "c.txt", "--element", "beta", "--proof", "beta.proof"],
        dir.path(),
    );
    assert_code(&out, 0);
    assert!(stdout(&out).contains("resp=1"));

    // A valid non-member proof verifies and exits 0 with resp=0.
    let out = run(
        &["zks-prove", "--state", "s.bin", "--element", "delta", "--output", "delta.proof"],
        dir.path(),
    );
    assert_code(&out, 0);
    assert!(stdout(&out).contains("response: non-member"));

    let out = run(
        &["zks-verify", "--commitment", "c.txt", "--element", "delta", "--proof", "delta.proof"],
        dir.path(),
    );
    assert_code(&out, 0);
    assert!(stdout(&out).contains("resp=0"));

    // A proof replayed against a different element is rejected.
    let out = run(
        &["zks-verify", "--commitment", "c.txt", "--element", "gamma", "--proof", "delta.proof"],
        dir.path(),
    );
    assert_code(&out, 1);
    assert!(stdout(&out).contains("zks-proof-invalid"));
}

#[test]
fn zks_commit_from_directory() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    fs::create_dir(&data).unwrap();
    fs::write(data.join("x.txt"), b"sample x").unwrap();
    fs::write(data.join("y.txt"), b"sample y").unwrap();

    let out = run(
        &["zks-commit", "--dir", "data", "--state", "s.bin", "--commitment", "c.txt"],
        dir.path(),
    );
    assert_code(&out, 0);
    assert!(stdout(&out).contains("committed: 2 elements"));

    let out = run(
        &[
            "zks-prove",
            "--state",
            "s.bin",
            "--element-file",
            "data/x.txt",
            "--output",
            "x.proof",
        ],
        dir.path(),
    );
    assert_code(&out, 0);
    assert!(stdout(&out).contains("response: member"));

    let out = run(
        &[
            "zks-verify",
            "--commitment",
            "c.txt",
            "--element-file",
            "data/x.txt",
            "--proof",
            "x.proof",
        ],
        dir.path(),
    );
    assert_code(&out, 0);
}

#[test]
fn zks_commit_duplicate_elements_is_format_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("elems.txt"), "same\nsame\n").unwrap();
    let out = run(
        &["zks-commit", "--list", "elems.txt", "--state", "s.bin", "--commitment", "c.txt"],
        dir.path(),
    );
    assert_code(&out, 4);
    assert!(stderr(&out).contains("duplicate"));
}

#[test]
fn log_flow_and_range_errors() {
    let dir = tempfile::tempdir().unwrap();
    for payload in ["one", "two", "three"] {
        let out = run(&["log", "--dir", "tlog", "append", "--payload", payload], dir.path());
        assert_code(&out, 0);
    }

    let out = run(&["log", "--dir", "tlog", "prove", "--index", "1"], dir.path());
    assert_code(&out, 0);
    assert!(stdout(&out).contains("tree-size: 3"));

    let out = run(
        &["log", "--dir", "tlog", "consistency", "--old-size", "2", "--new-size", "3"],
        dir.path(),
    );
    assert_code(&out, 0);

    let out = run(&["log", "--dir", "tlog", "audit"], dir.path());
    assert_code(&out, 0);
    assert!(stdout(&out).contains("audited 3 entries"));

    let out = run(&["log", "--dir", "tlog", "checkpoint"], dir.path());
    assert_code(&out, 0);
    assert_eq!(stdout(&out).lines().next(), Some("3"));

    let out = run(&["log", "--dir", "tlog", "prove", "--index", "9"], dir.path());
    assert_code(&out, 2);
}

#[test]
fn bench_emits_versioned_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["bench", "hash", "--sizes", "4KiB,16KiB", "--runs", "5", "--work-dir", "."],
        dir.path(),
    );
    assert_code(&out, 0);
    let text = stdout(&out);
    assert!(text.starts_with("# modelseal-bench/v1\n"));
    assert!(text.contains("# workers="));
    assert!(text.contains("experiment,operation,param,runs,median_seconds,fingerprint,note"));
    assert!(text.contains("hash,hash-naive,4096,5,"));
    assert!(text.contains("hash,hash-chunked,16384,5,"));

    let out = run(
        &["bench", "zks", "--sizes", "16", "--runs", "10", "--out", "zks.csv"],
        dir.path(),
    );
    assert_code(&out, 0);
    let csv = fs::read_to_string(dir.path().join("zks.csv")).unwrap();
    assert!(csv.starts_with("# modelseal-bench/v1\n"));
    for op in [
        "zks-commit",
        "zks-prove-inclusion",
        "zks-verify-inclusion",
        "zks-prove-non-inclusion",
        "zks-verify-non-inclusion",
    ] {
        assert!(csv.contains(&format!("zks,{op},16,10,")), "missing {op} row:\n{csv}");
    }
}

#[test]
fn bench_rejects_sizes_beyond_caps() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["bench", "hash", "--sizes", "5GiB"], dir.path());
    assert_code(&out, 2);
    let out = run(&["bench", "zks", "--sizes", "2000000"], dir.path());
    assert_code(&out, 2);
}

#[test]
fn json_mode_emits_parseable_objects() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("model.bin"), b"weights").unwrap();

    let out = run(&["--json", "hash", "model.bin"], dir.path());
    assert_code(&out, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["ok"], true);
    assert_eq!(v["digest"]["kind"], "file");

    let out = run(
        &["--json", "sign", "model.bin", "--identity", "x@example.com", "--state-dir", "state"],
        dir.path(),
    );
    assert_code(&out, 0);

    fs::write(dir.path().join("model.bin"), b"tampered").unwrap();
    let out = run(
        &["--json", "verify", "model.bin", "--trust-roots", "state/trust_roots.json"],
        dir.path(),
    );
    assert_code(&out, 1);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["ok"], false);
    assert_eq!(v["reason"], "digest-mismatch");
}

#[test]
fn error_exit_codes() {
    let dir = tempfile::tempdir().unwrap();

    // Unknown flag: usage, exit 2 (clap).
    let out = run(&["hash", "x", "--frobnicate"], dir.path());
    assert_code(&out, 2);

    // Missing input: io, exit 3.
    let out = run(&["hash", "missing.bin"], dir.path());
    assert_code(&out, 3);

    // Garbage where a structured file is expected: format, exit 4.
    fs::write(dir.path().join("junk"), b"not a commitment").unwrap();
    fs::write(dir.path().join("p"), b"").unwrap();
    let out = run(
        &["zks-verify", "--commitment", "junk", "--element", "x", "--proof", "p"],
        dir.path(),
    );
    assert_code(&out, 4);

    // Non-UTF-8 bytes in a text artifact are malformed input, not io trouble.
    fs::write(dir.path().join("binjunk"), [0xff, 0xfe, 0x00, 0x80]).unwrap();
    let out = run(
        &["zks-verify", "--commitment", "binjunk", "--element", "x", "--proof", "p"],
        dir.path(),
    );
    assert_code(&out, 4);

    // Truncated proof bytes: format, exit 4.
    fs::write(dir.path().join("elems.txt"), "a\nb\n").unwrap();
    let out = run(
        &["zks-commit", "--list", "elems.txt", "--state", "s.bin", "--commitment", "c.txt"],
        dir.path(),
    );
    assert_code(&out, 0);
    let out = run(
        &["zks-prove", "--state", "s.bin", "--element", "a", "--output", "a.proof"],
        dir.path(),
    );
    assert_code(&out, 0);
    let proof = fs::read(dir.path().join("a.proof")).unwrap();
    fs::write(dir.path().join("trunc.proof"), &proof[..proof.len() / 2]).unwrap();
    let out = run(
        &["zks-verify", "--commitment", "c.txt", "--element", "a", "--proof", "trunc.proof"],
        dir.path(),
    );
    assert_code(&out, 4);
}
