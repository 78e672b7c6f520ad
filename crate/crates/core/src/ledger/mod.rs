//! Commitments, Merkle trees and the hash-chained training ledger.

mod canonical;
mod chain;
mod commit;
mod merkle;
mod recorder;

pub use canonical::{format_float, round8, Canonical};
pub use chain::{
    chain_tail, entries_to_jsonl, read_doc_ids, read_entries, verify_ledger, write_doc_ids,
    write_entries, Ledger, LedgerEntry, LedgerFingerprint, Opening, RejectReason, Verdict,
    VerifyOptions, DEFAULT_METRIC_TOLERANCE, VALUE_METRIC,
};
pub use commit::{commit_message, commit_params, params_preimage, Commitment, Nonce, NONCE_LEN};
pub use merkle::{merkle_root, verify_proof, MerkleProof, MerkleTree, Side};
pub use recorder::{record_training, RecordedRun, RecorderConfig, RecordingOverhead};
