//! Instance-based and group-based accuracy over adversarial question
//! groups, results-table rendering, and ablation deltas. Metric internals
//! are exact rationals; rounding happens only at render time.

pub mod reference;

use crate::dataset::{GroupKey, QAInstance, Subtask, Variant};
use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("prediction {0} does not match any gold instance")]
    UnmatchedPrediction(String),
    #[error("duplicate prediction for instance {0}")]
    DuplicatePrediction(String),
    #[error("duplicate gold instance id {0}")]
    DuplicateGoldId(String),
    #[error("missing predictions for {} instance(s): {}", .0.len(), summarize_ids(.0))]
    MissingPredictions(Vec<String>),
    #[error("prediction {id} chose index {chosen} of {count} choices")]
    ChosenOutOfRange { id: String, chosen: usize, count: usize },
    #[error("no instances match filter {0}")]
    EmptyFilter(String),
    #[error("group {0} has no original instance")]
    GroupWithoutOriginal(String),
    #[error("cannot parse decimal {0:?}")]
    BadDecimal(String),
}

fn summarize_ids(ids: &[String]) -> String {
    const SHOW: usize = 5;
    if ids.len() <= SHOW {
        ids.join(", ")
    } else {
        format!("{}, ...", ids[..SHOW].join(", "))
    }
}

/// One model decision: which choice it picked for an instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub chosen_index: usize,
}

/// JSON Lines, one `{"id", "chosen_index"}` object per line.
pub fn read_predictions(path: &Path) -> Result<Vec<Prediction>, EvalError> {
    let text = fs::read_to_string(path).map_err(|e| EvalError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut predictions = Vec::new();
    for (line, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let pred: Prediction = serde_json::from_str(raw).map_err(|e| EvalError::Parse {
            line,
            message: e.to_string(),
        })?;
        predictions.push(pred);
    }
    Ok(predictions)
}

pub fn write_predictions(path: &Path, predictions: &[Prediction]) -> Result<(), EvalError> {
    let mut text = String::new();
    for pred in predictions {
        text.push_str(&serde_json::to_string(pred).expect("prediction serializes"));
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| EvalError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// An exact accuracy fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Accuracy {
    pub correct: u64,
    pub total: u64,
}

impl Accuracy {
    pub fn value(&self) -> f64 {
        self.correct as f64 / self.total.max(1) as f64
    }

    pub fn as_ratio(&self) -> Ratio<u64> {
        Ratio::new(self.correct, self.total.max(1))
    }
}

impl fmt::Display for Accuracy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.correct, self.total)
    }
}

/// Validated id -> prediction lookup over a gold set.
struct PredIndex<'a> {
    by_id: HashMap<&'a str, &'a Prediction>,
}

impl<'a> PredIndex<'a> {
    fn build(preds: &'a [Prediction], gold: &'a [QAInstance]) -> Result<Self, EvalError> {
        let mut gold_by_id: HashMap<&str, &QAInstance> = HashMap::with_capacity(gold.len());
        for inst in gold {
            if gold_by_id.insert(&inst.id, inst).is_some() {
                return Err(EvalError::DuplicateGoldId(inst.id.clone()));
            }
        }
        let mut by_id = HashMap::with_capacity(preds.len());
        for pred in preds {
            let inst = gold_by_id
                .get(pred.id.as_str())
                .ok_or_else(|| EvalError::UnmatchedPrediction(pred.id.clone()))?;
            if pred.chosen_index >= inst.choices.len() {
                return Err(EvalError::ChosenOutOfRange {
                    id: pred.id.clone(),
                    chosen: pred.chosen_index,
                    count: inst.choices.len(),
                });
            }
            if by_id.insert(pred.id.as_str(), pred).is_some() {
                return Err(EvalError::DuplicatePrediction(pred.id.clone()));
            }
        }
        Ok(PredIndex { by_id })
    }

    /// Prediction for every instance in `subset`, or the full missing list.
    fn cover(&self, subset: &[&'a QAInstance]) -> Result<Vec<(&'a QAInstance, &'a Prediction)>, EvalError> {
        let mut missing = Vec::new();
        let mut covered = Vec::with_capacity(subset.len());
        for &inst in subset {
            match self.by_id.get(inst.id.as_str()) {
                Some(pred) => covered.push((inst, *pred)),
                None => missing.push(inst.id.clone()),
            }
        }
        if missing.is_empty() {
            Ok(covered)
        } else {
            Err(EvalError::MissingPredictions(missing))
        }
    }
}

/// Fraction of instances answered correctly, optionally restricted to one
/// variant. Order-insensitive and exact.
pub fn instance_accuracy(
    preds: &[Prediction],
    gold: &[QAInstance],
    variant_filter: Option<Variant>,
) -> Result<Accuracy, EvalError> {
    let index = PredIndex::build(preds, gold)?;
    let subset: Vec<&QAInstance> = gold
        .iter()
        .filter(|inst| variant_filter.is_none_or(|v| inst.variant == v))
        .collect();
    if subset.is_empty() {
        let name = variant_filter.map_or("all".to_string(), |v| v.to_string());
        return Err(EvalError::EmptyFilter(name));
    }
    let covered = index.cover(&subset)?;
    let correct = covered
        .iter()
        .filter(|(inst, pred)| pred.chosen_index == inst.gold_index)
        .count() as u64;
    Ok(Accuracy { correct, total: subset.len() as u64 })
}

/// Group accuracy plus any warnings about incomplete groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupScore {
    pub accuracy: Accuracy,
    pub warnings: Vec<String>,
}

/// A group scores 1 iff every member instance whose variant is in `members`
/// is predicted correctly. Groups missing a requested variant are scored
/// over the variants they have, with a warning.
pub fn group_accuracy(
    preds: &[Prediction],
    gold: &[QAInstance],
    members: &BTreeSet<Variant>,
) -> Result<GroupScore, EvalError> {
    let index = PredIndex::build(preds, gold)?;
    let mut groups: BTreeMap<&GroupKey, Vec<&QAInstance>> = BTreeMap::new();
    for inst in gold {
        if inst.variant != Variant::Ungrouped {
            groups.entry(&inst.group).or_default().push(inst);
        }
    }
    if groups.is_empty() {
        return Err(EvalError::EmptyFilter("grouped instances".to_string()));
    }

    let mut warnings = Vec::new();
    let mut scoring = 0u64;
    for (key, instances) in &groups {
        if !instances.iter().any(|i| i.variant == Variant::Original) {
            return Err(EvalError::GroupWithoutOriginal(key.to_string()));
        }
        let present: BTreeSet<Variant> = instances.iter().map(|i| i.variant).collect();
        for wanted in members {
            if !present.contains(wanted) {
                warnings.push(format!("group {key} has no {wanted} variant"));
            }
        }
        let scored: Vec<&QAInstance> = instances
            .iter()
            .copied()
            .filter(|i| members.contains(&i.variant))
            .collect();
        let covered = index.cover(&scored)?;
        if covered.iter().all(|(inst, pred)| pred.chosen_index == inst.gold_index) {
            scoring += 1;
        }
    }
    Ok(GroupScore {
        accuracy: Accuracy { correct: scoring, total: groups.len() as u64 },
        warnings,
    })
}

/// The six Table-style columns for one subtask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubtaskMetrics {
    pub subtask: Subtask,
    pub original: Accuracy,
    pub semantic: Accuracy,
    pub context: Accuracy,
    pub orig_sem: Accuracy,
    pub orig_sem_con: Accuracy,
    pub overall: Accuracy,
    pub warnings: Vec<String>,
}

impl SubtaskMetrics {
    pub fn cells(&self) -> [(&'static str, Accuracy); 6] {
        [
            ("original", self.original),
            ("semantic", self.semantic),
            ("context", self.context),
            ("orig_sem", self.orig_sem),
            ("orig_sem_con", self.orig_sem_con),
            ("overall", self.overall),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MetricsTable {
    pub sections: Vec<SubtaskMetrics>,
}

/// Column order mirrors the published results layout.
pub const COLUMN_LABELS: [&str; 6] = [
    "Original",
    "Semantic",
    "Context",
    "Orig.+Sem.",
    "Orig.+Sem.+Con.",
    "Overall",
];

/// Populate all six columns for each (subtask, predictions, gold) section.
/// Predictions must cover every gold instance of their section.
pub fn build_results_table(
    sections: &[(Subtask, &[Prediction], &[QAInstance])],
) -> Result<MetricsTable, EvalError> {
    let mut table = MetricsTable::default();
    for (subtask, preds, gold) in sections {
        // Coverage first, so partial prediction files fail with the full
        // missing-id list rather than a per-metric error.
        let index = PredIndex::build(preds, gold)?;
        let all: Vec<&QAInstance> = gold.iter().collect();
        index.cover(&all)?;

        let orig_sem: BTreeSet<Variant> = [Variant::Original, Variant::Semantic].into();
        let orig_sem_con: BTreeSet<Variant> =
            [Variant::Original, Variant::Semantic, Variant::Context].into();
        let group_os = group_accuracy(preds, gold, &orig_sem)?;
        let group_osc = group_accuracy(preds, gold, &orig_sem_con)?;
        let mut warnings = group_os.warnings.clone();
        warnings.extend(group_osc.warnings);
        warnings.dedup();

        table.sections.push(SubtaskMetrics {
            subtask: *subtask,
            original: instance_accuracy(preds, gold, Some(Variant::Original))?,
            semantic: instance_accuracy(preds, gold, Some(Variant::Semantic))?,
            context: instance_accuracy(preds, gold, Some(Variant::Context))?,
            orig_sem: group_os.accuracy,
            orig_sem_con: group_osc.accuracy,
            overall: instance_accuracy(preds, gold, None)?,
            warnings,
        });
    }
    Ok(table)
}

impl MetricsTable {
    /// Plain-text table, three decimal places, optionally preceded by the
    /// published reference rows (which this workbench does not reproduce).
    pub fn render(&self, include_reference: bool) -> String {
        let mut out = String::new();
        for section in &self.sections {
            out.push_str(&format!("{} puzzle\n", capitalize(section.subtask.name())));
            out.push_str(&format!("{:<44}", "approach"));
            for label in COLUMN_LABELS {
                out.push_str(&format!(" {label:>16}"));
            }
            out.push('\n');
            if include_reference {
                for row in reference::REFERENCE_ROWS {
                    if let Some(cells) = row.for_subtask(section.subtask) {
                        out.push_str(&format!("{:<44}", format!("{} [reference]", row.label)));
                        for value in cells {
                            out.push_str(&format!(" {value:>16.3}"));
                        }
                        out.push('\n');
                    }
                }
            }
            out.push_str(&format!("{:<44}", "this run"));
            for (_, cell) in section.cells() {
                out.push_str(&format!(" {:>16.3}", cell.value()));
            }
            out.push('\n');
            for warning in &section.warnings {
                out.push_str(&format!("  warning: {warning}\n"));
            }
            out.push('\n');
        }
        if include_reference {
            out.push_str(&format!("note: {}\n", reference::REFERENCE_NOTE));
        }
        out
    }

    /// Machine-readable report: exact numerator/denominator per cell.
    pub fn to_json(&self) -> serde_json::Value {
        let sections: Vec<serde_json::Value> = self
            .sections
            .iter()
            .map(|section| {
                let cells: serde_json::Map<String, serde_json::Value> = section
                    .cells()
                    .iter()
                    .map(|(name, acc)| {
                        (
                            name.to_string(),
                            serde_json::json!({ "num": acc.correct, "den": acc.total }),
                        )
                    })
                    .collect();
                serde_json::json!({
                    "subtask": section.subtask.name(),
                    "cells": cells,
                    "warnings": section.warnings,
                })
            })
            .collect();
        serde_json::json!({ "sections": sections })
    }
}

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().collect::<String>() + chars.as_str(),
        None => String::new(),
    }
}

/// One configuration row of an ablation table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AblationRow {
    pub label: String,
    pub accuracy: Ratio<i64>,
    /// Exact difference to the previous row; `None` marks the baseline.
    pub delta: Option<Ratio<i64>>,
}

/// Consecutive differences over ordered (label, accuracy) rows.
pub fn ablation_deltas(rows: &[(String, Ratio<i64>)]) -> Vec<AblationRow> {
    rows.iter()
        .enumerate()
        .map(|(i, (label, accuracy))| AblationRow {
            label: label.clone(),
            accuracy: *accuracy,
            delta: (i > 0).then(|| accuracy - rows[i - 1].1),
        })
        .collect()
}

/// Parse a plain decimal like "50.8" or "-3.25" into an exact rational.
pub fn parse_decimal(text: &str) -> Result<Ratio<i64>, EvalError> {
    let bad = || EvalError::BadDecimal(text.to_string());
    let trimmed = text.trim();
    let (sign, digits) = match trimmed.strip_prefix('-') {
        Some(rest) => (-1i64, rest),
        None => (1i64, trimmed.strip_prefix('+').unwrap_or(trimmed)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if frac_part.len() > 9 {
        return Err(bad());
    }
    let int_value: i64 = if int_part.is_empty() {
        0
    } else {
        int_part.parse().map_err(|_| bad())?
    };
    let frac_value: i64 = if frac_part.is_empty() {
        0
    } else {
        frac_part.parse().map_err(|_| bad())?
    };
    let denom = 10i64.pow(frac_part.len() as u32);
    Ok(Ratio::new(sign * (int_value * denom + frac_value), denom))
}

/// Render an ablation table with signed one-decimal deltas.
pub fn render_ablation(rows: &[AblationRow]) -> String {
    let mut out = String::new();
    out.push_str(&format!("{:<44} {:>8} {:>8}\n", "configuration", "acc.", "delta"));
    for row in rows {
        let acc = ratio_to_f64(row.accuracy);
        match row.delta {
            Some(delta) => out.push_str(&format!(
                "{:<44} {:>8.1} {:>+8.1}\n",
                row.label,
                acc,
                ratio_to_f64(delta)
            )),
            None => out.push_str(&format!("{:<44} {:>8.1} {:>8}\n", row.label, acc, "-")),
        }
    }
    out
}

fn ratio_to_f64(r: Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::instance::test_fixtures::grouped;

    fn group_fixture() -> Vec<QAInstance> {
        let mut gold = Vec::new();
        for g in ["g1", "g2"] {
            gold.push(grouped(&format!("{g}-o"), g, Variant::Original, Subtask::Sentence));
            gold.push(grouped(&format!("{g}-s"), g, Variant::Semantic, Subtask::Sentence));
            gold.push(grouped(&format!("{g}-c"), g, Variant::Context, Subtask::Sentence));
        }
        gold
    }

    fn preds_with_errors(gold: &[QAInstance], wrong: &[&str]) -> Vec<Prediction> {
        gold.iter()
            .map(|inst| Prediction {
                id: inst.id.clone(),
                chosen_index: if wrong.contains(&inst.id.as_str()) {
                    (inst.gold_index + 1) % inst.choices.len()
                } else {
                    inst.gold_index
                },
            })
            .collect()
    }

    fn members(list: &[Variant]) -> BTreeSet<Variant> {
        list.iter().copied().collect()
    }

    #[test]
    fn all_correct_is_one() {
        let gold = group_fixture();
        let preds = preds_with_errors(&gold, &[]);
        let acc = instance_accuracy(&preds, &gold, None).unwrap();
        assert_eq!(acc, Accuracy { correct: 6, total: 6 });
        for set in [
            members(&[Variant::Original]),
            members(&[Variant::Original, Variant::Semantic]),
            members(&[Variant::Original, Variant::Semantic, Variant::Context]),
        ] {
            let score = group_accuracy(&preds, &gold, &set).unwrap();
            assert_eq!(score.accuracy, Accuracy { correct: 2, total: 2 });
            assert!(score.warnings.is_empty());
        }
    }

    #[test]
    fn three_of_four_is_three_quarters() {
        let gold: Vec<QAInstance> = (0..4)
            .map(|i| grouped(&format!("i{i}"), &format!("g{i}"), Variant::Original, Subtask::Word))
            .collect();
        let preds = preds_with_errors(&gold, &["i2"]);
        let acc = instance_accuracy(&preds, &gold, None).unwrap();
        assert_eq!(acc, Accuracy { correct: 3, total: 4 });
    }

    #[test]
    fn group_scoring_requires_every_member_correct() {
        let gold = group_fixture();
        // Group g2 wrong only on its context variant.
        let preds = preds_with_errors(&gold, &["g2-c"]);
        let os = group_accuracy(&preds, &gold, &members(&[Variant::Original, Variant::Semantic]))
            .unwrap();
        assert_eq!(os.accuracy, Accuracy { correct: 2, total: 2 });
        let osc = group_accuracy(
            &preds,
            &gold,
            &members(&[Variant::Original, Variant::Semantic, Variant::Context]),
        )
        .unwrap();
        assert_eq!(osc.accuracy, Accuracy { correct: 1, total: 2 });
    }

    #[test]
    fn unmatched_and_missing_predictions_error() {
        let gold = group_fixture();
        let mut preds = preds_with_errors(&gold, &[]);
        preds.push(Prediction { id: "ghost".into(), chosen_index: 0 });
        assert!(matches!(
            instance_accuracy(&preds, &gold, None),
            Err(EvalError::UnmatchedPrediction(id)) if id == "ghost"
        ));

        let partial = &preds_with_errors(&gold, &[])[..4];
        match instance_accuracy(partial, &gold, None) {
            Err(EvalError::MissingPredictions(ids)) => assert_eq!(ids.len(), 2),
            other => panic!("expected missing predictions, got {other:?}"),
        }
    }

    #[test]
    fn out_of_range_choice_is_rejected() {
        let gold = group_fixture();
        let mut preds = preds_with_errors(&gold, &[]);
        preds[0].chosen_index = 9;
        assert!(matches!(
            instance_accuracy(&preds, &gold, None),
            Err(EvalError::ChosenOutOfRange { .. })
        ));
    }

    #[test]
    fn group_without_original_errors() {
        let mut gold = group_fixture();
        gold.retain(|i| i.id != "g2-o");
        let preds = preds_with_errors(&gold, &[]);
        assert!(matches!(
            group_accuracy(&preds, &gold, &members(&[Variant::Original])),
            Err(EvalError::GroupWithoutOriginal(_))
        ));
    }

    #[test]
    fn incomplete_group_scores_with_warning() {
        let mut gold = group_fixture();
        gold.retain(|i| i.id != "g2-c");
        let preds = preds_with_errors(&gold, &[]);
        let score = group_accuracy(
            &preds,
            &gold,
            &members(&[Variant::Original, Variant::Semantic, Variant::Context]),
        )
        .unwrap();
        assert_eq!(score.accuracy, Accuracy { correct: 2, total: 2 });
        assert_eq!(score.warnings.len(), 1);
        assert!(score.warnings[0].contains("g2"));
    }

    #[test]
    fn single_original_groups_reduce_to_instance_accuracy() {
        let gold = group_fixture();
        let preds = preds_with_errors(&gold, &["g1-o", "g1-s"]);
        let by_group = group_accuracy(&preds, &gold, &members(&[Variant::Original])).unwrap();
        let by_instance = instance_accuracy(&preds, &gold, Some(Variant::Original)).unwrap();
        assert_eq!(by_group.accuracy, by_instance);
    }

    #[test]
    fn results_table_matches_hand_count() {
        let gold = group_fixture();
        // g1 fully correct; g2 wrong on semantic and context.
        let preds = preds_with_errors(&gold, &["g2-s", "g2-c"]);
        let table = build_results_table(&[(Subtask::Sentence, &preds[..], &gold[..])]).unwrap();
        let section = &table.sections[0];
        assert_eq!(section.original, Accuracy { correct: 2, total: 2 });
        assert_eq!(section.semantic, Accuracy { correct: 1, total: 2 });
        assert_eq!(section.context, Accuracy { correct: 1, total: 2 });
        assert_eq!(section.orig_sem, Accuracy { correct: 1, total: 2 });
        assert_eq!(section.orig_sem_con, Accuracy { correct: 1, total: 2 });
        assert_eq!(section.overall, Accuracy { correct: 4, total: 6 });
    }

    #[test]
    fn rendering_has_all_columns_and_three_decimals() {
        let gold = group_fixture();
        let preds = preds_with_errors(&gold, &[]);
        let table = build_results_table(&[(Subtask::Sentence, &preds[..], &gold[..])]).unwrap();
        let text = table.render(true);
        for label in COLUMN_LABELS {
            assert!(text.contains(label), "missing column {label}");
        }
        assert!(text.contains("1.000"));
        assert!(text.contains("[reference]"));
        assert!(text.contains(reference::REFERENCE_NOTE));
    }

    #[test]
    fn report_json_carries_exact_fractions() {
        let gold = group_fixture();
        let preds = preds_with_errors(&gold, &["g1-o"]);
        let table = build_results_table(&[(Subtask::Sentence, &preds[..], &gold[..])]).unwrap();
        let json = table.to_json();
        let cell = &json["sections"][0]["cells"]["original"];
        assert_eq!(cell["num"], 1);
        assert_eq!(cell["den"], 2);
    }

    #[test]
    fn ablation_deltas_are_exact_consecutive_differences() {
        let rows: Vec<(String, Ratio<i64>)> = [("a", "50.8"), ("b", "60.0"), ("c", "88.3"), ("d", "92.5")]
            .iter()
            .map(|(l, a)| (l.to_string(), parse_decimal(a).unwrap()))
            .collect();
        let deltas = ablation_deltas(&rows);
        assert_eq!(deltas[0].delta, None);
        assert_eq!(deltas[1].delta, Some(Ratio::new(92, 10)));
        assert_eq!(deltas[2].delta, Some(Ratio::new(283, 10)));
        assert_eq!(deltas[3].delta, Some(Ratio::new(42, 10)));
    }

    #[test]
    fn ablation_single_row_and_constant_rows() {
        let single = ablation_deltas(&[("only".to_string(), parse_decimal("5").unwrap())]);
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].delta, None);

        let constant: Vec<(String, Ratio<i64>)> =
            (0..3).map(|i| (format!("r{i}"), parse_decimal("41.5").unwrap())).collect();
        let rows = ablation_deltas(&constant);
        assert!(rows[1..].iter().all(|r| r.delta == Some(Ratio::new(0, 1))));
    }

    #[test]
    fn decimal_parsing_edges() {
        assert_eq!(parse_decimal("50.8").unwrap(), Ratio::new(508, 10));
        assert_eq!(parse_decimal("-3.25").unwrap(), Ratio::new(-325, 100));
        assert_eq!(parse_decimal("7").unwrap(), Ratio::new(7, 1));
        assert_eq!(parse_decimal(".5").unwrap(), Ratio::new(1, 2));
        assert!(parse_decimal("abc").is_err());
        assert!(parse_decimal("").is_err());
    }

    #[test]
    fn jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("preds.jsonl");
        let preds = vec![
            Prediction { id: "a".into(), chosen_index: 2 },
            Prediction { id: "b".into(), chosen_index: 0 },
        ];
        write_predictions(&path, &preds).unwrap();
        assert_eq!(read_predictions(&path).unwrap(), preds);
    }
}
