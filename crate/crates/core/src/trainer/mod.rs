//! Training loop, evaluation, early stopping, replication and search.

mod data;
mod io;
pub mod metrics;
mod run;
mod search;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{AutodiffError, LrSchedule};
use crate::graph::GraphError;
use crate::models::ModelKind;

pub use data::{plan_split, Prepared, SplitConfig, SplitData, SplitPlan};
pub use io::{append_jsonl, write_history_csv, HISTORY_HEADER};
pub use metrics::{accuracy, auc, average_precision, ndcg_at_k, recall_at_k, RankedQuery};
pub use run::{evaluate, train, EvalMetrics, TrainOutcome};
pub use search::{
    random_search, replicate, MetricsReport, SearchResult, SearchSpace, SeedResult, Summary,
    TrialRecord,
};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("metric needs both classes: {positives} positives, {negatives} negatives")]
    DegenerateLabels { positives: usize, negatives: usize },
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("invalid training setup: {0}")]
    Invalid(String),
    #[error("seed {seed}: {source}")]
    Seed {
        seed: u64,
        #[source]
        source: Box<TrainError>,
    },
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl TrainError {
    pub fn is_numerical(&self) -> bool {
        match self {
            TrainError::NonFiniteLoss { .. } => true,
            TrainError::Autodiff(e) => e.is_numerical(),
            TrainError::Seed { source, .. } => source.is_numerical(),
            _ => false,
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        TrainError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    #[default]
    BceLogits,
    Focal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LossConfig {
    pub kind: LossKind,
    /// Defaults to 2.5 for GAT and 2.0 for the other models.
    pub pos_weight: Option<f64>,
    pub gamma: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            kind: LossKind::BceLogits,
            pos_weight: None,
            gamma: 2.0,
        }
    }
}

impl LossConfig {
    pub fn pos_weight_for(&self, kind: ModelKind) -> f64 {
        self.pos_weight
            .unwrap_or(if kind == ModelKind::Gat { 2.5 } else { 2.0 })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    /// Defaults to 150 for GAT, 30 for PinSAGE and 100 otherwise.
    pub epochs: Option<usize>,
    pub batch_size: usize,
    pub neg_ratio: f64,
    /// Negatives per positive in the fixed evaluation sets.
    pub eval_neg_ratio: f64,
    pub patience: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub schedule: LrSchedule,
    pub loss: LossConfig,
    /// Per-hop neighbor caps; `fanout[h]` bounds hop `h + 1` from the seeds.
    pub fanout: Vec<usize>,
    /// Hide each batch's positive edges from its own sampled neighborhood.
    pub exclude_targets: bool,
    pub seeds: Vec<u64>,
    pub ranking_k: usize,
    pub ranking_negatives: usize,
    /// Nodes per forward pass when embedding a whole split.
    pub eval_chunk: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: None,
            batch_size: 512,
            neg_ratio: 0.3,
            eval_neg_ratio: 1.0,
            patience: 20,
            lr: 0.005,
            weight_decay: 1e-5,
            schedule: LrSchedule::Constant,
            loss: LossConfig::default(),
            fanout: vec![10, 10],
            exclude_targets: false,
            seeds: vec![0],
            ranking_k: 10,
            ranking_negatives: 100,
            eval_chunk: 1024,
        }
    }
}

impl TrainConfig {
    pub fn epochs_for(&self, kind: ModelKind) -> usize {
        self.epochs.unwrap_or(match kind {
            ModelKind::Gat => 150,
            ModelKind::Pinsage => 30,
            _ => 100,
        })
    }
}

/// One row of the training history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub train_auc: f64,
    pub train_ap: f64,
    pub val_loss: f64,
    pub val_acc: f64,
    pub val_auc: f64,
    pub val_ap: f64,
    pub seconds: f64,
}

/// Tracks the best validation AUC; only strict improvements reset the
/// counter.
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyStopper {
    pub patience: usize,
    pub best: f64,
    pub best_epoch: Option<usize>,
    pub since_improvement: usize,
}

impl EarlyStopper {
    pub fn new(patience: usize) -> Self {
        EarlyStopper {
            patience,
            best: f64::NEG_INFINITY,
            best_epoch: None,
            since_improvement: 0,
        }
    }

    /// Records `value` for `epoch`; returns whether it is a new best.
    pub fn update(&mut self, epoch: usize, value: f64) -> bool {
        if value > self.best {
            self.best = value;
            self.best_epoch = Some(epoch);
            self.since_improvement = 0;
            true
        } else {
            self.since_improvement += 1;
            false
        }
    }

    pub fn should_stop(&self) -> bool {
        self.since_improvement >= self.patience
    }
}
