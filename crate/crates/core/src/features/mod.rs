//! Per-node feature assembly: title vectors, group one-hot, z-scored
//! numerics and pooled category-path embeddings.

mod embeddings;
mod ftm;
mod group;
mod paths;
mod pca;
mod standardize;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::Matrix;
use crate::graph::NodeId;
use crate::ingest::MergedTable;

pub use embeddings::{
    read_emb1, read_emb_tsv, read_embeddings, write_emb1, TitleEmbeddings, EMB_MAGIC,
};
pub use ftm::{read_ftm, write_ftm, FTM_MAGIC};
pub use group::{encode_group, GroupVocab, SNAP_GROUPS};
pub use paths::{pool_paths, PathVocabulary};
pub use pca::Pca;
pub use standardize::Standardizer;

pub const NUMERIC_FIELDS: [&str; 7] = [
    "salesrank_log",
    "category_count",
    "reviews_total_log",
    "reviews_downloaded_log",
    "reviews_avg_ratings",
    "reviews_avg_votes",
    "reviews_avg_helpful",
];

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("corrupt file: {0}")]
    CorruptFile(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("node {0} is not a training node; statistics must be fit on training rows only")]
    NonTrainInput(NodeId),
    #[error("unknown numeric field {0:?}")]
    UnknownField(String),
    #[error("feature matrix contains a non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeatureSpec {
    pub title_dim: usize,
    pub group_vocab: Vec<String>,
    pub numeric_fields: Vec<String>,
    pub path_dim: usize,
    pub pca_target: Option<usize>,
    /// Fit the group vocabulary from training rows instead of using
    /// `group_vocab` as given.
    pub fit_group_vocab: bool,
    /// Expose the path table to the model as a trainable parameter.
    pub trainable_path_emb: bool,
}

impl Default for FeatureSpec {
    fn default() -> Self {
        FeatureSpec {
            title_dim: 384,
            group_vocab: SNAP_GROUPS.iter().map(|s| s.to_string()).collect(),
            numeric_fields: NUMERIC_FIELDS.iter().map(|s| s.to_string()).collect(),
            path_dim: 200,
            pca_target: None,
            fit_group_vocab: false,
            trainable_path_emb: false,
        }
    }
}

impl FeatureSpec {
    pub fn title_out_dim(&self) -> usize {
        self.pca_target.unwrap_or(self.title_dim)
    }

    pub fn total_dim(&self) -> usize {
        self.title_out_dim() + self.group_vocab.len() + self.numeric_fields.len() + self.path_dim
    }

    pub fn numeric_indices(&self) -> Result<Vec<usize>, FeatureError> {
        self.numeric_fields
            .iter()
            .map(|f| {
                NUMERIC_FIELDS
                    .iter()
                    .position(|k| k == f)
                    .ok_or_else(|| FeatureError::UnknownField(f.clone()))
            })
            .collect()
    }
}

/// Set of node ids that fitting functions accept.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSet {
    mask: Vec<bool>,
}

impl TrainSet {
    pub fn new(num_nodes: usize, train: &[NodeId]) -> Self {
        TrainSet {
            mask: crate::graph::node_mask(num_nodes, train),
        }
    }

    pub fn contains(&self, u: NodeId) -> bool {
        self.mask.get(u as usize).copied().unwrap_or(false)
    }

    pub fn nodes(&self) -> Vec<NodeId> {
        (0..self.mask.len() as NodeId)
            .filter(|&u| self.mask[u as usize])
            .collect()
    }

    pub(crate) fn check(&self, rows: &[NodeId]) -> Result<(), FeatureError> {
        match rows.iter().find(|&&u| !self.contains(u)) {
            Some(&u) => Err(FeatureError::NonTrainInput(u)),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockRange {
    pub name: &'static str,
    pub start: usize,
    pub end: usize,
}

/// Node feature rows plus the column ranges of each block.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub data: Matrix,
    pub blocks: Vec<BlockRange>,
    /// Nodes without a title vector (filled with zeros).
    pub missing_titles: usize,
    /// Per-node path ids and the path table, kept when the table is trainable.
    pub path_input: Option<PathInput>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathInput {
    pub table: Matrix,
    pub item_paths: Vec<Vec<usize>>,
}

impl FeatureMatrix {
    /// Wraps a bare matrix as a single block.
    pub fn plain(data: Matrix) -> Self {
        let d = data.cols();
        FeatureMatrix {
            data,
            blocks: vec![BlockRange {
                name: "features",
                start: 0,
                end: d,
            }],
            missing_titles: 0,
            path_input: None,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.data.rows()
    }

    pub fn dim(&self) -> usize {
        self.data.cols()
    }

    pub fn block(&self, name: &str) -> Option<&BlockRange> {
        self.blocks.iter().find(|b| b.name == name)
    }
}

/// Everything fit on training rows, reusable for any row.
#[derive(Debug, Clone)]
pub struct FittedFeatures {
    pub spec: FeatureSpec,
    pub groups: GroupVocab,
    pub standardizer: Standardizer,
    pub paths: PathVocabulary,
    pub pca: Option<Pca>,
}

fn numeric_matrix(merged: &MergedTable, idx: &[usize]) -> Matrix {
    let mut m = Matrix::zeros(merged.rows.len(), idx.len());
    for (r, row) in merged.rows.iter().enumerate() {
        let all = row.numeric();
        for (c, &k) in idx.iter().enumerate() {
            m.set(r, c, all[k]);
        }
    }
    m
}

fn title_matrix(merged: &MergedTable, emb: &TitleEmbeddings) -> (Matrix, usize) {
    let mut m = Matrix::zeros(merged.rows.len(), emb.dim());
    let mut missing = 0;
    for (r, row) in merged.rows.iter().enumerate() {
        match emb.get(&row.asin) {
            Some(v) => {
                for (o, &x) in m.row_mut(r).iter_mut().zip(v) {
                    *o = x as f64;
                }
            }
            None => missing += 1,
        }
    }
    (m, missing)
}

impl FittedFeatures {
    /// Fits every statistic on `train` rows of `merged` (row index = node id).
    pub fn fit(
        merged: &MergedTable,
        train: &TrainSet,
        emb: &TitleEmbeddings,
        spec: &FeatureSpec,
        seed: u64,
    ) -> Result<Self, FeatureError> {
        if emb.dim() != spec.title_dim {
            return Err(FeatureError::DimensionMismatch {
                expected: spec.title_dim,
                found: emb.dim(),
            });
        }
        let rows = train.nodes();
        let idx = spec.numeric_indices()?;
        let groups = if spec.fit_group_vocab {
            GroupVocab::fit(merged, &rows, train, spec.group_vocab.len())?
        } else {
            GroupVocab::new(spec.group_vocab.clone())
        };
        let standardizer = Standardizer::fit(&numeric_matrix(merged, &idx), &rows, train)?;
        let paths = PathVocabulary::fit(merged, &rows, train, spec.path_dim, seed)?;
        let pca = match spec.pca_target {
            Some(k) => {
                let (titles, _) = title_matrix(merged, emb);
                Some(Pca::fit(&titles.select_rows(&to_usize(&rows)), k)?)
            }
            None => None,
        };
        let mut spec = spec.clone();
        spec.group_vocab = groups.labels().to_vec();
        Ok(FittedFeatures {
            spec,
            groups,
            standardizer,
            paths,
            pca,
        })
    }

    /// Builds the `N x total_dim` matrix, block order title, group, numeric, path.
    pub fn assemble(
        &self,
        merged: &MergedTable,
        emb: &TitleEmbeddings,
    ) -> Result<FeatureMatrix, FeatureError> {
        if emb.dim() != self.spec.title_dim {
            return Err(FeatureError::DimensionMismatch {
                expected: self.spec.title_dim,
                found: emb.dim(),
            });
        }
        let n = merged.rows.len();
        let (titles, missing) = title_matrix(merged, emb);
        let titles = match &self.pca {
            Some(p) => p.transform(&titles),
            None => titles,
        };
        let idx = self.spec.numeric_indices()?;
        let numeric = self.standardizer.apply(&numeric_matrix(merged, &idx));
        let widths = [
            ("title", titles.cols()),
            ("group", self.groups.len()),
            ("numeric", idx.len()),
            ("path", self.paths.dim()),
        ];
        let mut blocks = Vec::new();
        let mut off = 0;
        for (name, w) in widths {
            blocks.push(BlockRange {
                name,
                start: off,
                end: off + w,
            });
            off += w;
        }
        let mut data = Matrix::zeros(n, off);
        let mut item_paths = Vec::with_capacity(n);
        for (r, row) in merged.rows.iter().enumerate() {
            let out = data.row_mut(r);
            out[blocks[0].start..blocks[0].end].copy_from_slice(titles.row(r));
            out[blocks[1].start..blocks[1].end].copy_from_slice(&self.groups.encode(&row.group));
            out[blocks[2].start..blocks[2].end].copy_from_slice(numeric.row(r));
            let ids = self.paths.ids_for(std::slice::from_ref(&row.path));
            out[blocks[3].start..blocks[3].end].copy_from_slice(&pool_paths(&ids, &self.paths));
            item_paths.push(ids);
        }
        if let Some(pos) = data.as_slice().iter().position(|x| !x.is_finite()) {
            return Err(FeatureError::NonFinite {
                row: pos / off.max(1),
                col: pos % off.max(1),
            });
        }
        let path_input = self.spec.trainable_path_emb.then(|| PathInput {
            table: self.paths.table().clone(),
            item_paths,
        });
        Ok(FeatureMatrix {
            data,
            blocks,
            missing_titles: missing,
            path_input,
        })
    }
}

fn to_usize(ids: &[NodeId]) -> Vec<usize> {
    ids.iter().map(|&u| u as usize).collect()
}
