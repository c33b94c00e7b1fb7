//! Signing round-trips over randomly shaped model directories.

use modelseal::digest::HashAlg;
use modelseal::model_hash::HashParams;
use modelseal::signing::{verify_model, SigningService};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// One hundred models with one to fifty files of up to four mebibytes each
/// sign and verify cleanly, under both schemes and both algorithms.
#[test]
fn hundred_random_models_round_trip() {
    let mut rng = ChaCha20Rng::seed_from_u64(77);
    let svc = SigningService::ephemeral();
    let roots = svc.trust_roots();
    let mut buf = vec![0u8; 4 << 20];
    for model_idx in 0..100 {
        let dir = tempfile::tempdir().unwrap();
        let file_count = rng.gen_range(1..=50);
        for f in 0..file_count {
            let size = rng.gen_range(0..=buf.len());
            rng.fill_bytes(&mut buf[..size]);
            let sub = match f % 4 {
                0 => format!("weights/part-{f:03}.bin"),
                1 => format!("tokenizer-{f}.json"),
                _ => format!("shard.{f}"),
            };
            let path = dir.path().join(sub);
            std::fs::create_dir_all(path.parent().unwrap()).unwrap();
            std::fs::write(&path, &buf[..size]).unwrap();
        }
        let alg = if model_idx % 2 == 0 { HashAlg::Sha256 } else { HashAlg::Blake2b256 };
        let params = if model_idx % 3 == 0 {
            HashParams::naive(alg)
        } else {
            HashParams::chunked(alg, 8 << 20)
        };
        let identity = format!("trainer-{model_idx}@example.org");
        let bundle = svc.sign(dir.path(), &identity, params, None).unwrap();
        verify_model(dir.path(), &bundle, &roots)
            .unwrap_or_else(|e| panic!("model {model_idx} failed verification: {e}"));
    }
}
