use std::collections::BTreeMap;

use rand_distr::{Distribution, Normal};

use super::{FeatureError, TrainSet};
use crate::autodiff::Matrix;
use crate::graph::NodeId;
use crate::ingest::MergedTable;

/// Dense ids for category paths plus a frozen random embedding table.
#[derive(Debug, Clone, PartialEq)]
pub struct PathVocabulary {
    ids: BTreeMap<String, usize>,
    table: Matrix,
    seed: u64,
}

pub(crate) fn path_key(path: &[String]) -> String {
    path.join("|")
}

impl PathVocabulary {
    /// Ids follow the lexicographic order of the `|`-joined path strings;
    /// rows are drawn from N(0, 1/dim).
    pub fn build<I, S>(paths: I, dim: usize, seed: u64) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut keys: Vec<String> = paths.into_iter().map(Into::into).collect();
        keys.sort();
        keys.dedup();
        let ids: BTreeMap<String, usize> =
            keys.into_iter().enumerate().map(|(i, k)| (k, i)).collect();
        let mut rng = crate::rng::rng(seed);
        let normal = Normal::new(0.0, (1.0 / dim.max(1) as f64).sqrt()).expect("finite std");
        let data = (0..ids.len() * dim)
            .map(|_| normal.sample(&mut rng))
            .collect();
        PathVocabulary {
            table: Matrix::from_vec(ids.len(), dim, data),
            ids,
            seed,
        }
    }

    /// Vocabulary over the representative paths of training rows.
    pub fn fit(
        merged: &MergedTable,
        rows: &[NodeId],
        train: &TrainSet,
        dim: usize,
        seed: u64,
    ) -> Result<Self, FeatureError> {
        train.check(rows)?;
        let paths = rows
            .iter()
            .map(|&u| &merged.rows[u as usize].path)
            .filter(|p| !p.is_empty())
            .map(|p| path_key(p));
        Ok(Self::build(paths, dim, seed))
    }

    pub fn id(&self, key: &str) -> Option<usize> {
        self.ids.get(key).copied()
    }

    /// Known ids among the given segment lists.
    pub fn ids_for(&self, paths: &[Vec<String>]) -> Vec<usize> {
        paths.iter().filter_map(|p| self.id(&path_key(p))).collect()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.table.cols()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn table(&self) -> &Matrix {
        &self.table
    }
}

/// Mean of the table rows for `ids`; zeros when `ids` is empty.
pub fn pool_paths(ids: &[usize], vocab: &PathVocabulary) -> Vec<f64> {
    let mut out = vec![0.0; vocab.dim()];
    if ids.is_empty() {
        return out;
    }
    for &i in ids {
        for (o, x) in out.iter_mut().zip(vocab.table.row(i)) {
            *o += x;
        }
    }
    let n = ids.len() as f64;
    out.iter_mut().for_each(|o| *o /= n);
    out
}
