//! The canonical multiple-choice instance and the JSON array format every
//! pipeline stage reads and writes.

use super::DatasetError;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::Path;

/// Identifier tying an original question to its adversarial reconstructions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupKey(pub String);

impl GroupKey {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for GroupKey {
    fn from(s: &str) -> Self {
        GroupKey(s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Original,
    Semantic,
    Context,
    Ungrouped,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Original => "original",
            Variant::Semantic => "semantic",
            Variant::Context => "context",
            Variant::Ungrouped => "ungrouped",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum,
)]
#[serde(rename_all = "lowercase")]
#[clap(rename_all = "lowercase")]
pub enum Subtask {
    Sentence,
    Word,
    External,
}

impl Subtask {
    pub fn name(self) -> &'static str {
        match self {
            Subtask::Sentence => "sentence",
            Subtask::Word => "word",
            Subtask::External => "external",
        }
    }
}

impl fmt::Display for Subtask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Provided,
    Humor,
    Riddlesense,
    Synthetic,
}

impl Source {
    pub fn name(self) -> &'static str {
        match self {
            Source::Provided => "provided",
            Source::Humor => "humor",
            Source::Riddlesense => "riddlesense",
            Source::Synthetic => "synthetic",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One multiple-choice question: text, ordered choices, gold index, and the
/// grouping metadata the evaluator scores over.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QAInstance {
    pub id: String,
    pub question: String,
    pub choices: Vec<String>,
    pub gold_index: usize,
    pub group: GroupKey,
    pub variant: Variant,
    pub subtask: Subtask,
    pub source: Source,
}

impl QAInstance {
    /// Per-instance invariants: at least two choices, gold index in range,
    /// choices pairwise distinct after whitespace normalization.
    pub fn validate(&self) -> Result<(), DatasetError> {
        if self.choices.len() < 2 {
            return Err(self.invalid(format!("needs at least 2 choices, has {}", self.choices.len())));
        }
        if self.gold_index >= self.choices.len() {
            return Err(self.invalid(format!(
                "gold_index {} out of range for {} choices",
                self.gold_index,
                self.choices.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for choice in &self.choices {
            if !seen.insert(normalize_whitespace(choice)) {
                return Err(self.invalid(format!("duplicate choice text {choice:?}")));
            }
        }
        Ok(())
    }

    pub fn gold_text(&self) -> &str {
        &self.choices[self.gold_index]
    }

    fn invalid(&self, message: String) -> DatasetError {
        DatasetError::Validation {
            id: self.id.clone(),
            message,
        }
    }
}

/// Collapse whitespace runs to single spaces and trim the ends; the equality
/// under which choice texts must be distinct.
pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Parse a canonical JSON array of instances, validating each record.
pub fn parse_instances(text: &str) -> Result<Vec<QAInstance>, DatasetError> {
    let values: Vec<serde_json::Value> =
        serde_json::from_str(text).map_err(|e| DatasetError::Parse {
            record: None,
            message: e.to_string(),
        })?;
    let mut instances = Vec::with_capacity(values.len());
    for (index, value) in values.into_iter().enumerate() {
        let inst: QAInstance =
            serde_json::from_value(value).map_err(|e| DatasetError::Parse {
                record: Some(index),
                message: e.to_string(),
            })?;
        inst.validate()?;
        instances.push(inst);
    }
    Ok(instances)
}

pub fn read_instances(path: &Path) -> Result<Vec<QAInstance>, DatasetError> {
    let text = fs::read_to_string(path).map_err(|e| DatasetError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    parse_instances(&text)
}

pub fn write_instances(path: &Path, instances: &[QAInstance]) -> Result<(), DatasetError> {
    let mut text = serde_json::to_string_pretty(instances).expect("instances serialize");
    text.push('\n');
    fs::write(path, text).map_err(|e| DatasetError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Load a provided-task file, forcing every record onto `subtask` and
/// checking that each adversarial reconstruction points at a group that has
/// an original in the same file.
pub fn load_brainteaser(path: &Path, subtask: Subtask) -> Result<Vec<QAInstance>, DatasetError> {
    let mut instances = read_instances(path)?;
    for inst in &mut instances {
        inst.subtask = subtask;
    }
    let originals: BTreeSet<&GroupKey> = instances
        .iter()
        .filter(|i| i.variant == Variant::Original)
        .map(|i| &i.group)
        .collect();
    for inst in &instances {
        if matches!(inst.variant, Variant::Semantic | Variant::Context)
            && !originals.contains(&inst.group)
        {
            return Err(DatasetError::Validation {
                id: inst.id.clone(),
                message: format!(
                    "variant {} references group {} which has no original instance",
                    inst.variant, inst.group
                ),
            });
        }
    }
    Ok(instances)
}
