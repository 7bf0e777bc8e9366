//! Multi-seed replication and random hyperparameter search.

use std::collections::HashSet;
use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::data::Prepared;
use super::io::append_jsonl;
use super::run::{train, EvalMetrics, TrainOutcome};
use super::{TrainConfig, TrainError};
use crate::features::FeatureMatrix;
use crate::models::{ModelKind, ModelsConfig};
use crate::rng::rng_from;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub val: EvalMetrics,
    pub test: EvalMetrics,
}

/// Mean over seeds; `std` (sample) only with at least two seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: Option<f64>,
}

impl Summary {
    pub fn of(values: &[f64]) -> Summary {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = (values.len() >= 2)
            .then(|| (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
        Summary { mean, std }
    }
}

impl std::fmt::Display for Summary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.std {
            Some(s) => write!(f, "{:.4} ± {:.4}", self.mean, s),
            None => write!(f, "{:.4}", self.mean),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub model: ModelKind,
    pub seeds: Vec<SeedResult>,
    pub test_auc: Summary,
    pub test_ap: Summary,
    pub test_loss: Summary,
    pub test_acc: Summary,
    pub val_auc: Summary,
    pub recall_at_k: Option<Summary>,
    pub ndcg_at_k: Option<Summary>,
    pub models: ModelsConfig,
    pub train: TrainConfig,
}

/// Independent runs for every seed in `cfg.seeds`.
pub fn replicate(
    kind: ModelKind,
    models: &ModelsConfig,
    cfg: &TrainConfig,
    data: &Prepared,
    features: Option<&FeatureMatrix>,
) -> Result<(MetricsReport, Vec<TrainOutcome>), TrainError> {
    if cfg.seeds.is_empty() {
        return Err(TrainError::Invalid("at least one seed is required".into()));
    }
    let outcomes = cfg
        .seeds
        .iter()
        .map(|&seed| {
            train(kind, models, cfg, data, features, seed).map_err(|e| TrainError::Seed {
                seed,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let seeds: Vec<SeedResult> = outcomes
        .iter()
        .map(|o| SeedResult {
            seed: o.seed,
            best_epoch: o.best_epoch,
            epochs_run: o.history.len(),
            val: o.val.clone(),
            test: o.test.clone(),
        })
        .collect();
    let pick =
        |f: &dyn Fn(&SeedResult) -> f64| Summary::of(&seeds.iter().map(f).collect::<Vec<_>>());
    let opt = |f: &dyn Fn(&SeedResult) -> Option<f64>| {
        seeds
            .iter()
            .map(f)
            .collect::<Option<Vec<_>>>()
            .map(|v| Summary::of(&v))
    };
    let report = MetricsReport {
        model: kind,
        test_auc: pick(&|s| s.test.auc),
        test_ap: pick(&|s| s.test.ap),
        test_loss: pick(&|s| s.test.loss),
        test_acc: pick(&|s| s.test.acc),
        val_auc: pick(&|s| s.val.auc),
        recall_at_k: opt(&|s| s.test.recall_at_k),
        ndcg_at_k: opt(&|s| s.test.ndcg_at_k),
        seeds,
        models: models.clone(),
        train: cfg.clone(),
    };
    Ok((report, outcomes))
}

/// Finite value sets for each searched hyperparameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchSpace {
    pub hidden: Vec<usize>,
    pub lr: Vec<f64>,
    pub batch_size: Vec<usize>,
    pub dropout: Vec<f64>,
    pub fanout: Vec<Vec<usize>>,
    pub weight_decay: Vec<f64>,
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            hidden: vec![32, 64, 128],
            lr: vec![0.01, 0.005, 0.001],
            batch_size: vec![512, 1024],
            dropout: vec![0.3, 0.5],
            fanout: vec![vec![5, 5], vec![10, 10], vec![15, 10]],
            weight_decay: vec![0.0, 1e-6, 1e-5, 5e-5, 1e-4],
        }
    }
}

impl SearchSpace {
    fn dims(&self) -> [usize; 6] {
        [
            self.hidden.len(),
            self.lr.len(),
            self.batch_size.len(),
            self.dropout.len(),
            self.fanout.len(),
            self.weight_decay.len(),
        ]
    }

    pub fn size(&self) -> usize {
        self.dims().iter().product()
    }

    pub fn validate(&self) -> Result<(), String> {
        const NAMES: [&str; 6] = [
            "hidden",
            "lr",
            "batch_size",
            "dropout",
            "fanout",
            "weight_decay",
        ];
        match self.dims().iter().position(|&d| d == 0) {
            Some(i) => Err(format!("search space '{}' is empty", NAMES[i])),
            None => Ok(()),
        }
    }

    fn point(&self, idx: [usize; 6]) -> TrialParams {
        TrialParams {
            hidden: self.hidden[idx[0]],
            lr: self.lr[idx[1]],
            batch_size: self.batch_size[idx[2]],
            dropout: self.dropout[idx[3]],
            fanout: self.fanout[idx[4]].clone(),
            weight_decay: self.weight_decay[idx[5]],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialParams {
    pub hidden: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub dropout: f64,
    pub fanout: Vec<usize>,
    pub weight_decay: f64,
}

impl TrialParams {
    /// Copies of the base configs with this point applied. Hidden width
    /// and dropout go to the selected model; fanout only to models that
    /// sample by fan-out.
    pub fn apply(
        &self,
        kind: ModelKind,
        models: &ModelsConfig,
        cfg: &TrainConfig,
    ) -> (ModelsConfig, TrainConfig) {
        let mut m = models.clone();
        let mut c = cfg.clone();
        match kind {
            ModelKind::Sage => {
                m.sage.hidden = self.hidden;
                m.sage.dropout = self.dropout;
            }
            ModelKind::Gat => {
                m.gat.hidden = self.hidden;
                m.gat.dropout = self.dropout;
            }
            ModelKind::Pinsage => {
                m.pinsage.hidden = self.hidden;
                m.pinsage.dropout = self.dropout;
            }
            ModelKind::Lightgcn => m.lightgcn.emb_dim = self.hidden,
        }
        if matches!(kind, ModelKind::Sage | ModelKind::Gat) {
            c.fanout = self.fanout.clone();
        }
        c.lr = self.lr;
        c.batch_size = self.batch_size;
        c.weight_decay = self.weight_decay;
        (m, c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub params: TrialParams,
    pub best_val_auc: f64,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub test: EvalMetrics,
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub best: TrialRecord,
    pub models: ModelsConfig,
    pub train: TrainConfig,
    pub trials: Vec<TrialRecord>,
}

/// Uniform draws without repetition; stops early once the space is
/// exhausted. Every trial trains with the first seed of `cfg.seeds`.
#[allow(clippy::too_many_arguments)]
pub fn random_search(
    kind: ModelKind,
    models: &ModelsConfig,
    cfg: &TrainConfig,
    space: &SearchSpace,
    trials: usize,
    data: &Prepared,
    features: Option<&FeatureMatrix>,
    seed: u64,
    log: Option<&Path>,
) -> Result<SearchResult, TrainError> {
    space.validate().map_err(TrainError::Invalid)?;
    if trials == 0 {
        return Err(TrainError::Invalid("trials must be >= 1".into()));
    }
    let run_seed = cfg.seeds.first().copied().unwrap_or(0);
    let mut rng = rng_from(&[seed, 0x5EA2]);
    let dims = space.dims();
    let mut seen = HashSet::new();
    let mut records: Vec<TrialRecord> = Vec::new();
    let mut best: Option<(usize, ModelsConfig, TrainConfig)> = None;
    while records.len() < trials.min(space.size()) {
        let idx = dims.map(|d| rng.random_range(0..d));
        if !seen.insert(idx) {
            continue;
        }
        let params = space.point(idx);
        let (m, c) = params.apply(kind, models, cfg);
        let out = train(kind, &m, &c, data, features, run_seed)?;
        let rec = TrialRecord {
            trial: records.len(),
            params,
            best_val_auc: out.best_val_auc,
            best_epoch: out.best_epoch,
            epochs_run: out.history.len(),
            test: out.test,
        };
        if let Some(path) = log {
            append_jsonl(path, &rec)?;
        }
        let better = match &best {
            None => true,
            Some((b, ..)) => {
                let b = &records[*b];
                rec.best_val_auc > b.best_val_auc
                    || (rec.best_val_auc == b.best_val_auc && rec.best_epoch < b.best_epoch)
            }
        };
        if better {
            best = Some((records.len(), m, c));
        }
        records.push(rec);
    }
    let (b, m, c) = best.expect("at least one trial ran");
    Ok(SearchResult {
        best: records[b].clone(),
        models: m,
        train: c,
        trials: records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_std_needs_two_values() {
        assert_eq!(Summary::of(&[0.5]).std, None);
        assert_eq!(Summary::of(&[0.5, 0.5]).std, Some(0.0));
        let s = Summary::of(&[1.0, 3.0]);
        assert_eq!(s.mean, 2.0);
        assert!((s.std.unwrap() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn default_space_size() {
        assert_eq!(SearchSpace::default().size(), 3 * 3 * 2 * 2 * 3 * 5);
        let mut s = SearchSpace::default();
        s.lr.clear();
        assert!(s.validate().unwrap_err().contains("lr"));
    }
}
