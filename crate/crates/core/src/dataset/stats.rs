//! Per-(source, subtask, split) instance counts for dataset reporting.

use super::instance::{QAInstance, Source, Subtask};
use std::collections::BTreeMap;
use std::fmt;

/// Instance counts keyed by (source, subtask, split name).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetStats {
    counts: BTreeMap<(Source, Subtask, String), usize>,
}

impl DatasetStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, source: Source, subtask: Subtask, split: &str, count: usize) {
        *self.counts.entry((source, subtask, split.to_string())).or_insert(0) += count;
    }

    /// Tally every instance of a split.
    pub fn add_instances(&mut self, split: &str, instances: &[QAInstance]) {
        for inst in instances {
            self.record(inst.source, inst.subtask, split, 1);
        }
    }

    pub fn count(&self, source: Source, subtask: Subtask, split: &str) -> usize {
        self.counts
            .get(&(source, subtask, split.to_string()))
            .copied()
            .unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Source, Subtask, &str, usize)> {
        self.counts
            .iter()
            .map(|((source, subtask, split), count)| (*source, *subtask, split.as_str(), *count))
    }
}

impl fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<14} {:<10} {:<12} {:>8}", "source", "subtask", "split", "count")?;
        for (source, subtask, split, count) in self.iter() {
            writeln!(f, "{:<14} {:<10} {:<12} {:>8}", source, subtask, split, count)?;
        }
        write!(f, "{:<14} {:<10} {:<12} {:>8}", "total", "", "", self.total())
    }
}

#[cfg(test)]
mod tests {
    use super::super::instance::test_fixtures::{grouped, ungrouped};
    use super::super::instance::Variant;
    use super::*;

    #[test]
    fn counts_accumulate_by_key() {
        let mut stats = DatasetStats::new();
        stats.add_instances(
            "train",
            &[
                grouped("a", "g1", Variant::Original, Subtask::Sentence),
                grouped("b", "g1", Variant::Semantic, Subtask::Sentence),
                ungrouped("c", "joke"),
            ],
        );
        stats.record(Source::Provided, Subtask::Sentence, "train", 2);
        assert_eq!(stats.count(Source::Provided, Subtask::Sentence, "train"), 4);
        assert_eq!(stats.count(Source::Humor, Subtask::External, "train"), 1);
        assert_eq!(stats.count(Source::Humor, Subtask::External, "test"), 0);
        assert_eq!(stats.total(), 5);
    }

    #[test]
    fn display_renders_a_row_per_key() {
        let mut stats = DatasetStats::new();
        stats.record(Source::Provided, Subtask::Word, "train", 316);
        let text = stats.to_string();
        assert!(text.contains("provided"));
        assert!(text.contains("316"));
    }
}
