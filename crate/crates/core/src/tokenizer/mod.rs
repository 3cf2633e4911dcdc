//! Byte-level byte-pair-encoding tokenizer: trainable merge table, lossless
//! encode/decode, question/choice pair packing, end truncation.
//!
//! Ids 0..3 are reserved specials (pad, sequence start, separator), ids
//! 3..259 are the 256 raw bytes, and learned merges follow densely from 259.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const PAD_ID: u32 = 0;
pub const START_ID: u32 = 1;
pub const SEP_ID: u32 = 2;
pub const SPECIAL_COUNT: usize = 3;
/// Specials plus the 256 single-byte tokens.
pub const BASE_VOCAB: usize = SPECIAL_COUNT + 256;

#[derive(Debug, Error)]
pub enum TokenizerError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("target vocabulary {target} is below the {BASE_VOCAB}-entry byte base")]
    TargetTooSmall { target: usize },
    #[error("unknown token id {0}")]
    UnknownId(u32),
    #[error("cannot decode a truncated sequence")]
    DecodeTruncated,
    #[error("decoded bytes are not valid UTF-8")]
    InvalidUtf8,
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed merge table: {0}")]
    Malformed(String),
}

/// An encoded sequence plus whether truncation cut it short.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSeq {
    pub ids: Vec<u32>,
    pub truncated: bool,
}

impl TokenSeq {
    pub fn untruncated(ids: Vec<u32>) -> Self {
        TokenSeq { ids, truncated: false }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Ordered merge rules plus the dense id-to-bytes vocabulary they induce.
/// Immutable once trained; encode/decode are reentrant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergeTable {
    merges: Vec<(u32, u32)>,
    vocab: Vec<Vec<u8>>,
    pair_lookup: HashMap<(u32, u32), u32>,
}

fn base_vocab() -> Vec<Vec<u8>> {
    let mut vocab = vec![Vec::new(); SPECIAL_COUNT];
    vocab.extend((0..=255u8).map(|b| vec![b]));
    vocab
}

impl MergeTable {
    fn from_merges(merges: Vec<(u32, u32)>) -> Result<Self, TokenizerError> {
        let mut vocab = base_vocab();
        let mut pair_lookup = HashMap::new();
        for (index, &(a, b)) in merges.iter().enumerate() {
            let id = (BASE_VOCAB + index) as u32;
            let limit = id;
            for parent in [a, b] {
                if parent < SPECIAL_COUNT as u32 || parent >= limit {
                    return Err(TokenizerError::Malformed(format!(
                        "rule {index} references token {parent} which is not producible yet"
                    )));
                }
            }
            let mut bytes = vocab[a as usize].clone();
            bytes.extend_from_slice(&vocab[b as usize]);
            vocab.push(bytes);
            pair_lookup.insert((a, b), id);
        }
        Ok(MergeTable { merges, vocab, pair_lookup })
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn merges(&self) -> &[(u32, u32)] {
        &self.merges
    }

    pub fn token_bytes(&self, id: u32) -> Option<&[u8]> {
        self.vocab.get(id as usize).map(Vec::as_slice)
    }

    fn apply_merges(&self, ids: &mut Vec<u32>) {
        for (&(a, b), index) in self.merges.iter().zip(0u32..) {
            let merged = BASE_VOCAB as u32 + index;
            apply_one_merge(ids, a, b, merged);
        }
    }

    pub fn to_json(&self) -> String {
        let file = TableFile {
            merges: self
                .merges
                .iter()
                .map(|&(a, b)| {
                    (
                        hex::encode(&self.vocab[a as usize]),
                        hex::encode(&self.vocab[b as usize]),
                    )
                })
                .collect(),
            specials: SpecialsFile { pad: PAD_ID, start: START_ID, sep: SEP_ID },
        };
        let mut text = serde_json::to_string_pretty(&file).expect("table serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self, TokenizerError> {
        let file: TableFile = serde_json::from_str(text)
            .map_err(|e| TokenizerError::Malformed(e.to_string()))?;
        if (file.specials.pad, file.specials.start, file.specials.sep)
            != (PAD_ID, START_ID, SEP_ID)
        {
            return Err(TokenizerError::Malformed(
                "unexpected special-token assignment".to_string(),
            ));
        }
        // Replay the merges, resolving each parent's byte sequence to the
        // smallest id that spells it.
        let mut by_bytes: HashMap<Vec<u8>, u32> = HashMap::new();
        for (id, bytes) in base_vocab().into_iter().enumerate().skip(SPECIAL_COUNT) {
            by_bytes.insert(bytes, id as u32);
        }
        let mut merges = Vec::with_capacity(file.merges.len());
        let mut vocab = base_vocab();
        for (index, (a_hex, b_hex)) in file.merges.iter().enumerate() {
            let resolve = |h: &str| -> Result<u32, TokenizerError> {
                let bytes = hex::decode(h)
                    .map_err(|_| TokenizerError::Malformed(format!("rule {index}: bad hex {h:?}")))?;
                by_bytes.get(&bytes).copied().ok_or_else(|| {
                    TokenizerError::Malformed(format!(
                        "rule {index}: parent {h:?} is not producible by earlier rules"
                    ))
                })
            };
            let a = resolve(a_hex)?;
            let b = resolve(b_hex)?;
            let id = (BASE_VOCAB + index) as u32;
            let mut bytes = vocab[a as usize].clone();
            bytes.extend_from_slice(&vocab[b as usize]);
            by_bytes.entry(bytes.clone()).or_insert(id);
            vocab.push(bytes);
            merges.push((a, b));
        }
        MergeTable::from_merges(merges)
    }

    pub fn save(&self, path: &Path) -> Result<(), TokenizerError> {
        fs::write(path, self.to_json()).map_err(|e| TokenizerError::Io {
            path: path.to_path_buf(),
            source: e,
        })
    }

    pub fn load(path: &Path) -> Result<Self, TokenizerError> {
        let text = fs::read_to_string(path).map_err(|e| TokenizerError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        MergeTable::from_json(&text)
    }
}

#[derive(Serialize, Deserialize)]
struct TableFile {
    merges: Vec<(String, String)>,
    specials: SpecialsFile,
}

#[derive(Serialize, Deserialize)]
struct SpecialsFile {
    pad: u32,
    start: u32,
    sep: u32,
}

/// One left-to-right replacement pass for a single rule.
fn apply_one_merge(ids: &mut Vec<u32>, a: u32, b: u32, merged: u32) {
    let mut write = 0;
    let mut read = 0;
    while read < ids.len() {
        if read + 1 < ids.len() && ids[read] == a && ids[read + 1] == b {
            ids[write] = merged;
            read += 2;
        } else {
            ids[write] = ids[read];
            read += 1;
        }
        write += 1;
    }
    ids.truncate(write);
}

fn byte_ids(text: &str) -> Vec<u32> {
    text.bytes().map(|b| SPECIAL_COUNT as u32 + b as u32).collect()
}

/// Train a merge table by greedy highest-count pair merging over the corpus
/// byte sequences, until `target_vocab` is reached or no pair occurs at
/// least twice. Count ties break on the lexicographically smallest merged
/// byte sequence, so training is fully deterministic.
pub fn train_bpe<S: AsRef<str>>(
    corpus: &[S],
    target_vocab: usize,
) -> Result<MergeTable, TokenizerError> {
    if corpus.is_empty() {
        return Err(TokenizerError::EmptyCorpus);
    }
    if target_vocab < BASE_VOCAB {
        return Err(TokenizerError::TargetTooSmall { target: target_vocab });
    }

    let mut seqs: Vec<Vec<u32>> = corpus.iter().map(|s| byte_ids(s.as_ref())).collect();
    let mut vocab = base_vocab();
    let mut merges = Vec::new();

    while vocab.len() < target_vocab {
        let mut counts: HashMap<(u32, u32), usize> = HashMap::new();
        for seq in &seqs {
            for pair in seq.windows(2) {
                *counts.entry((pair[0], pair[1])).or_insert(0) += 1;
            }
        }
        let mut best: Vec<u8> = Vec::new();
        let mut best_pair: Option<((u32, u32), usize)> = None;
        for (&(a, b), &count) in &counts {
            if count < 2 {
                continue;
            }
            let mut bytes = vocab[a as usize].clone();
            bytes.extend_from_slice(&vocab[b as usize]);
            let better = match best_pair {
                None => true,
                Some((prev_pair, prev_count)) => {
                    count > prev_count
                        || (count == prev_count
                            && (bytes < best || (bytes == best && (a, b) < prev_pair)))
                }
            };
            if better {
                best = bytes;
                best_pair = Some(((a, b), count));
            }
        }
        let Some(((a, b), _)) = best_pair else { break };
        let merged = vocab.len() as u32;
        vocab.push(best);
        merges.push((a, b));
        for seq in &mut seqs {
            apply_one_merge(seq, a, b, merged);
        }
    }
    MergeTable::from_merges(merges)
}

/// Encode text to token ids, applying merges in rule order and truncating to
/// `max_len` from the end. The truncated flag is set exactly when the input
/// produced more than `max_len` tokens.
pub fn encode(table: &MergeTable, text: &str, max_len: usize) -> TokenSeq {
    let mut ids = byte_ids(text);
    table.apply_merges(&mut ids);
    truncate_to(ids, max_len)
}

fn truncate_to(mut ids: Vec<u32>, max_len: usize) -> TokenSeq {
    if ids.len() > max_len {
        ids.truncate(max_len);
        TokenSeq { ids, truncated: true }
    } else {
        TokenSeq { ids, truncated: false }
    }
}

/// Exact inverse of [`encode`] on untruncated sequences. Special ids are
/// skipped; unknown ids and invalid UTF-8 are errors.
pub fn decode(table: &MergeTable, seq: &TokenSeq) -> Result<String, TokenizerError> {
    if seq.truncated {
        return Err(TokenizerError::DecodeTruncated);
    }
    let mut bytes = Vec::new();
    for &id in &seq.ids {
        if id < SPECIAL_COUNT as u32 {
            continue;
        }
        let token = table.token_bytes(id).ok_or(TokenizerError::UnknownId(id))?;
        bytes.extend_from_slice(token);
    }
    String::from_utf8(bytes).map_err(|_| TokenizerError::InvalidUtf8)
}

/// `[start] question [sep] choice`, truncated from the end to `max_len` so
/// the question head survives.
pub fn encode_pair(table: &MergeTable, question: &str, choice: &str, max_len: usize) -> TokenSeq {
    let mut ids = vec![START_ID];
    ids.extend(encode(table, question, usize::MAX).ids);
    ids.push(SEP_ID);
    ids.extend(encode(table, choice, usize::MAX).ids);
    truncate_to(ids, max_len)
}

/// `[start] question ([sep] choice)*` for the positional-class head,
/// truncated from the end to `max_len`.
pub fn encode_packed<S: AsRef<str>>(
    table: &MergeTable,
    question: &str,
    choices: &[S],
    max_len: usize,
) -> TokenSeq {
    let mut ids = vec![START_ID];
    ids.extend(encode(table, question, usize::MAX).ids);
    for choice in choices {
        ids.push(SEP_ID);
        ids.extend(encode(table, choice.as_ref(), usize::MAX).ids);
    }
    truncate_to(ids, max_len)
}
