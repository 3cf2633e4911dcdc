//! Data ingestion and augmentation: canonical instance files, riddle
//! remapping, generated-humor ingestion with deduplication, source mixing,
//! and group-aware train/validation splitting.

pub mod dedup;
pub mod humor;
pub mod instance;
pub mod mixer;
pub mod riddles;
pub mod stats;
pub mod synthetic;

pub use dedup::{dedup, DedupPolicy, DedupScope, Normalization};
pub use humor::{
    generate_humor_batch, load_humor, CompletionClient, FileMockClient, HttpCompletionClient,
    HumorRecord, PromptId,
};
pub use instance::{
    load_brainteaser, normalize_whitespace, parse_instances, read_instances, write_instances,
    GroupKey, QAInstance, Source, Subtask, Variant,
};
pub use mixer::{mix, shuffle_choices, split_train_val};
pub use riddles::{load_riddlesense, remap_five_to_four, RawRiddle};
pub use stats::DatasetStats;
pub use synthetic::copy_marker_dataset;

use sha2::{Digest, Sha256};
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// A record failed to parse; `record` is its zero-based index when known.
    #[error("{}parse error: {message}", match record { Some(i) => format!("record {i}: "), None => String::new() })]
    Parse {
        record: Option<usize>,
        message: String,
    },
    #[error("instance {id}: {message}")]
    Validation { id: String, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error("transport error: {0}")]
    Transport(String),
    /// The completion service answered, but the body was not a humor array.
    #[error("unparseable completion response: {message}; body: {body}")]
    Format { message: String, body: String },
}

/// First 12 hex digits of the SHA-256 of `text`; used to derive stable ids
/// for sources whose records carry none of their own.
pub(crate) fn short_hash(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    hex::encode(&digest[..6])
}
