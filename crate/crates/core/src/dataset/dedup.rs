//! Order-preserving deduplication under a configurable text normalization.

use super::instance::{normalize_whitespace, QAInstance};
use serde::{Deserialize, Serialize};

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum,
)]
#[serde(rename_all = "snake_case")]
#[clap(rename_all = "snake_case")]
pub enum Normalization {
    /// Byte-for-byte equality.
    Exact,
    /// Casefold, collapse whitespace, strip terminal punctuation.
    #[default]
    CasefoldStripPunct,
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum,
)]
#[serde(rename_all = "snake_case")]
#[clap(rename_all = "snake_case")]
pub enum DedupScope {
    #[default]
    QuestionOnly,
    QuestionPlusChoices,
}

/// Which texts are compared and under what normalization. Deterministic:
/// the same inputs and policy always produce the same kept/dropped split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DedupPolicy {
    pub normalization: Normalization,
    pub scope: DedupScope,
}

/// Normalize one text under the policy's normalization mode.
pub fn normalize(text: &str, normalization: Normalization) -> String {
    match normalization {
        Normalization::Exact => text.to_string(),
        Normalization::CasefoldStripPunct => {
            let collapsed = normalize_whitespace(&text.to_lowercase());
            collapsed
                .trim_end_matches(|c: char| c.is_ascii_punctuation() || c.is_whitespace())
                .to_string()
        }
    }
}

/// The equivalence-class key an instance dedups under.
pub fn dedup_key(inst: &QAInstance, policy: DedupPolicy) -> String {
    let mut key = normalize(&inst.question, policy.normalization);
    if policy.scope == DedupScope::QuestionPlusChoices {
        for choice in &inst.choices {
            key.push('\u{1f}');
            key.push_str(&normalize(choice, policy.normalization));
        }
    }
    key
}

/// Partition `instances` into (kept, dropped): the first occurrence of each
/// normalization-equivalence class is kept in input order, later ones are
/// dropped.
pub fn dedup(
    instances: Vec<QAInstance>,
    policy: DedupPolicy,
) -> (Vec<QAInstance>, Vec<QAInstance>) {
    let mut seen = std::collections::HashSet::new();
    let mut kept = Vec::with_capacity(instances.len());
    let mut dropped = Vec::new();
    for inst in instances {
        if seen.insert(dedup_key(&inst, policy)) {
            kept.push(inst);
        } else {
            dropped.push(inst);
        }
    }
    (kept, dropped)
}
