//! Published reference accuracies rendered alongside our results for
//! context. These are external values this workbench does not reproduce;
//! nothing asserts them.

use crate::dataset::Subtask;

/// Six columns in [`super::COLUMN_LABELS`] order, per subtask where the
/// source reported them.
pub struct ReferenceRow {
    pub label: &'static str,
    pub sentence: Option<[f64; 6]>,
    pub word: Option<[f64; 6]>,
}

impl ReferenceRow {
    pub fn for_subtask(&self, subtask: Subtask) -> Option<[f64; 6]> {
        match subtask {
            Subtask::Sentence => self.sentence,
            Subtask::Word => self.word,
            Subtask::External => None,
        }
    }
}

pub const REFERENCE_NOTE: &str =
    "reference rows are published values for context only; this workbench does not reproduce them";

pub const REFERENCE_ROWS: &[ReferenceRow] = &[
    ReferenceRow {
        label: "human",
        sentence: Some([0.907, 0.907, 0.944, 0.907, 0.889, 0.920]),
        word: Some([0.917, 0.917, 0.917, 0.917, 0.900, 0.917]),
    },
    ReferenceRow {
        label: "chatgpt zero-shot",
        sentence: Some([0.608, 0.593, 0.679, 0.507, 0.397, 0.627]),
        word: Some([0.561, 0.524, 0.518, 0.439, 0.292, 0.535]),
    },
    ReferenceRow {
        label: "roberta-l zero-shot",
        sentence: Some([0.435, 0.402, 0.464, 0.330, 0.201, 0.434]),
        word: Some([0.195, 0.195, 0.232, 0.146, 0.061, 0.207]),
    },
    ReferenceRow {
        label: "published fine-tuned best (sentence config)",
        sentence: Some([0.925, 0.950, 0.900, 0.925, 0.875, 0.925]),
        word: None,
    },
    ReferenceRow {
        label: "published fine-tuned best (word config)",
        sentence: None,
        word: Some([0.844, 0.812, 0.750, 0.781, 0.594, 0.802]),
    },
];
