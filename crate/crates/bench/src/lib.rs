//! Inputs shared by the criterion benches.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use snapfork_core::oracles::random_sketch_text;
use snapfork_core::suite::reference_corpus;
use snapfork_core::wireproto::{encode_request, frame_message, BranchConfig, BranchParams, RpcEnvelope, BRANCH};

/// A branch request carrying `configs` tactics, framed for the wire.
pub fn framed_branch_request(configs: usize) -> Vec<u8> {
    let params = BranchParams {
        snapshot_id: "snap-0".into(),
        configs: (0..configs).map(|i| BranchConfig::new(format!("tactic_{i}"))).collect(),
    };
    let envelope: RpcEnvelope =
        encode_request(BRANCH, serde_json::to_value(params).expect("params serialize"), 1).expect("known method");
    frame_message(&envelope.to_json())
}

/// Every sketch source in the bundled corpus.
pub fn corpus_sketches() -> Vec<String> {
    reference_corpus().problems.into_iter().map(|p| p.sketch).collect()
}

/// Seeded adversarial fragments for the scanner.
pub fn generated_sketches(count: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_sketch_text(&mut rng)).collect()
}
