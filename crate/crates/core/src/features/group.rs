use std::collections::HashMap;

use super::{FeatureError, TrainSet};
use crate::graph::NodeId;
use crate::ingest::MergedTable;

/// The product groups present in the SNAP metadata dump.
pub const SNAP_GROUPS: [&str; 10] = [
    "Book",
    "Music",
    "DVD",
    "Video",
    "Toy",
    "Video Games",
    "Software",
    "Baby Product",
    "CE",
    "Sports",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupVocab {
    labels: Vec<String>,
}

/// One-hot vector over `vocab`; all zeros for labels outside it.
pub fn encode_group(group: &str, vocab: &[String]) -> Vec<f64> {
    let mut v = vec![0.0; vocab.len()];
    if let Some(i) = vocab.iter().position(|g| g == group) {
        v[i] = 1.0;
    }
    v
}

impl GroupVocab {
    pub fn new(labels: Vec<String>) -> Self {
        GroupVocab { labels }
    }

    /// Up to `max` most frequent groups among training rows, ties by name.
    pub fn fit(
        merged: &MergedTable,
        rows: &[NodeId],
        train: &TrainSet,
        max: usize,
    ) -> Result<Self, FeatureError> {
        train.check(rows)?;
        let mut freq: HashMap<&str, usize> = HashMap::new();
        for &u in rows {
            *freq
                .entry(merged.rows[u as usize].group.as_str())
                .or_default() += 1;
        }
        let mut all: Vec<(&str, usize)> = freq.into_iter().collect();
        all.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        Ok(GroupVocab {
            labels: all
                .into_iter()
                .take(max)
                .map(|(g, _)| g.to_string())
                .collect(),
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn encode(&self, group: &str) -> Vec<f64> {
        encode_group(group, &self.labels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::MergedRow;

    #[test]
    fn one_hot_and_unseen() {
        let v = GroupVocab::new(vec!["Book".into(), "Music".into(), "DVD".into()]);
        assert_eq!(v.encode("Book"), vec![1.0, 0.0, 0.0]);
        assert_eq!(v.encode("Toy"), vec![0.0, 0.0, 0.0]);
        assert_eq!(SNAP_GROUPS.len(), 10);
    }

    #[test]
    fn fit_uses_train_rows_only() {
        let m = MergedTable {
            rows: ["Music", "Book", "Book", "Toy"]
                .iter()
                .map(|g| MergedRow {
                    group: g.to_string(),
                    ..MergedRow::default()
                })
                .collect(),
        };
        let train = TrainSet::new(4, &[0, 1, 2]);
        let v = GroupVocab::fit(&m, &[0, 1, 2], &train, 10).unwrap();
        assert_eq!(v.labels(), &["Book".to_string(), "Music".to_string()]);
        assert!(matches!(
            GroupVocab::fit(&m, &[0, 3], &train, 10),
            Err(FeatureError::NonTrainInput(3))
        ));
    }
}
