//! Five-choice riddle ingestion and the five-to-four label remap.

use super::instance::{GroupKey, QAInstance, Source, Subtask, Variant};
use super::{short_hash, DatasetError};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

const RIDDLE_LABELS: [&str; 5] = ["A", "B", "C", "D", "E"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledChoice {
    pub label: String,
    pub text: String,
}

/// One five-choice riddle as found in the JSON Lines input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawRiddle {
    pub question: String,
    pub choices: Vec<LabeledChoice>,
    #[serde(rename = "answerKey")]
    pub answer_key: String,
}

impl RawRiddle {
    /// Exactly five choices labeled A..E in order, answer key among them.
    pub fn validate(&self) -> Result<(), DatasetError> {
        if self.choices.len() != 5 {
            return Err(DatasetError::Invalid(format!(
                "riddle {:?} has {} choices, expected 5",
                self.question,
                self.choices.len()
            )));
        }
        for (choice, expected) in self.choices.iter().zip(RIDDLE_LABELS) {
            if choice.label != expected {
                return Err(DatasetError::Invalid(format!(
                    "riddle {:?}: label {:?} where {expected:?} was expected",
                    self.question, choice.label
                )));
            }
        }
        if !RIDDLE_LABELS.contains(&self.answer_key.as_str()) {
            return Err(DatasetError::Invalid(format!(
                "riddle {:?}: answer key {:?} is not one of A..E",
                self.question, self.answer_key
            )));
        }
        Ok(())
    }

    fn answer_position(&self) -> usize {
        RIDDLE_LABELS
            .iter()
            .position(|l| *l == self.answer_key)
            .expect("validated answer key")
    }
}

/// Read a JSON Lines file of five-choice riddles; blank lines are skipped.
pub fn load_riddlesense(path: &Path) -> Result<Vec<RawRiddle>, DatasetError> {
    let text = fs::read_to_string(path).map_err(|e| DatasetError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut riddles = Vec::new();
    for (index, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let riddle: RawRiddle = serde_json::from_str(line).map_err(|e| DatasetError::Parse {
            record: Some(index),
            message: e.to_string(),
        })?;
        riddle.validate()?;
        riddles.push(riddle);
    }
    Ok(riddles)
}

/// Convert a five-choice riddle to a four-choice instance.
///
/// When the answer key is E the gold text replaces choice D (gold index 3);
/// otherwise choices A–D are kept verbatim, choice E is dropped, and the gold
/// index is the answer's position among A–D. The gold TEXT is preserved in
/// every case.
pub fn remap_five_to_four(raw: &RawRiddle) -> Result<QAInstance, DatasetError> {
    raw.validate()?;
    let texts: Vec<&str> = raw.choices.iter().map(|c| c.text.as_str()).collect();
    let (choices, gold_index) = match raw.answer_position() {
        4 => (vec![texts[0], texts[1], texts[2], texts[4]], 3),
        gold => (vec![texts[0], texts[1], texts[2], texts[3]], gold),
    };
    let id = format!("rs-{}", short_hash(&raw.question));
    let inst = QAInstance {
        id: id.clone(),
        question: raw.question.clone(),
        choices: choices.into_iter().map(str::to_string).collect(),
        gold_index,
        group: GroupKey(id),
        variant: Variant::Ungrouped,
        subtask: Subtask::External,
        source: Source::Riddlesense,
    };
    // Distinctness is re-checked on the kept four; duplicates that only
    // involved the discarded fifth choice are fine.
    inst.validate()?;
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn riddle(question: &str, texts: [&str; 5], answer: &str) -> RawRiddle {
        RawRiddle {
            question: question.to_string(),
            choices: RIDDLE_LABELS
                .iter()
                .zip(texts)
                .map(|(label, text)| LabeledChoice {
                    label: label.to_string(),
                    text: text.to_string(),
                })
                .collect(),
            answer_key: answer.to_string(),
        }
    }

    #[test]
    fn answer_e_replaces_fourth_choice() {
        let raw = riddle("q", ["c0", "c1", "c2", "c3", "c4"], "E");
        let inst = remap_five_to_four(&raw).unwrap();
        assert_eq!(inst.choices, vec!["c0", "c1", "c2", "c4"]);
        assert_eq!(inst.gold_index, 3);
        assert_eq!(inst.gold_text(), "c4");
    }

    #[test]
    fn answer_a_keeps_first_four() {
        let raw = riddle("q", ["c0", "c1", "c2", "c3", "c4"], "A");
        let inst = remap_five_to_four(&raw).unwrap();
        assert_eq!(inst.choices, vec!["c0", "c1", "c2", "c3"]);
        assert_eq!(inst.gold_index, 0);
        assert_eq!(inst.gold_text(), "c0");
    }

    #[test]
    fn duplicate_dropped_fifth_choice_is_fine() {
        // c4 duplicates c1 but is discarded, so the kept four stay distinct.
        let raw = riddle("q", ["c0", "c1", "c2", "c3", "c1"], "B");
        let inst = remap_five_to_four(&raw).unwrap();
        assert_eq!(inst.gold_index, 1);
    }

    #[test]
    fn duplicate_among_kept_four_is_rejected() {
        let raw = riddle("q", ["c0", "c1", "c1", "c3", "c4"], "B");
        assert!(remap_five_to_four(&raw).is_err());
    }

    #[test]
    fn wrong_label_order_is_rejected() {
        let mut raw = riddle("q", ["c0", "c1", "c2", "c3", "c4"], "A");
        raw.choices.swap(0, 1);
        assert!(remap_five_to_four(&raw).is_err());
    }

    #[test]
    fn jsonl_loader_reports_line_index() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("riddles.jsonl");
        let good = serde_json::to_string(&riddle("q", ["a", "b", "c", "d", "e"], "C")).unwrap();
        std::fs::write(&path, format!("{good}\nnot json\n")).unwrap();
        let err = load_riddlesense(&path).unwrap_err();
        match err {
            DatasetError::Parse { record, .. } => assert_eq!(record, Some(1)),
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn gold_text_preserved_across_all_answer_positions() {
        for (i, key) in RIDDLE_LABELS.iter().enumerate() {
            let raw = riddle("q", ["t0", "t1", "t2", "t3", "t4"], key);
            let inst = remap_five_to_four(&raw).unwrap();
            assert_eq!(inst.choices.len(), 4);
            assert_eq!(inst.gold_text(), format!("t{i}"));
        }
    }
}
