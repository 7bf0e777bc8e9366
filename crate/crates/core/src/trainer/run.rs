//! One training run and split evaluation.

use std::collections::HashSet;
use std::time::Instant;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::data::{Prepared, SplitData};
use super::metrics::{accuracy, auc, average_precision, ndcg_at_k, recall_at_k, RankedQuery};
use super::{EarlyStopper, EpochStats, LossKind, TrainConfig, TrainError};
use crate::autodiff::{sigmoid, Adam, DropoutKey, Matrix, SparseRows, Tape, Var};
use crate::features::FeatureMatrix;
use crate::graph::{Graph, NodeId, SplitMode};
use crate::models::{normalized_adjacency, Encoder, Model, ModelKind, ModelsConfig};
use crate::rng::{derive, rng_from};
use crate::sampler::{precompute_walks, LinkLoader, NeighborSampler, WalkParams, WalkTable};

/// Metrics of one split under the fixed evaluation set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub loss: f64,
    pub acc: f64,
    pub auc: f64,
    pub ap: f64,
    pub recall_at_k: Option<f64>,
    pub ndcg_at_k: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub kind: ModelKind,
    pub seed: u64,
    pub history: Vec<EpochStats>,
    pub best_epoch: usize,
    pub best_val_auc: f64,
    pub stopped_early: bool,
    /// Validation and test metrics of the restored best model; test
    /// includes the ranking metrics.
    pub val: EvalMetrics,
    pub test: EvalMetrics,
    /// Parameters restored to the best epoch.
    pub model: Model,
}

/// Per-run state shared by training and evaluation.
struct Session<'a> {
    kind: ModelKind,
    models: &'a ModelsConfig,
    cfg: &'a TrainConfig,
    data: &'a Prepared,
    features: Option<&'a FeatureMatrix>,
    /// PinSAGE walk tables for train, val, test.
    walks: Vec<Option<WalkTable>>,
    /// LightGCN propagation operator over the training graph.
    train_adj: Option<SparseRows>,
    seed: u64,
}

fn split_index(name: &str) -> usize {
    match name {
        "train" => 0,
        "val" => 1,
        _ => 2,
    }
}

impl<'a> Session<'a> {
    fn new(
        kind: ModelKind,
        models: &'a ModelsConfig,
        cfg: &'a TrainConfig,
        data: &'a Prepared,
        features: Option<&'a FeatureMatrix>,
        seed: u64,
    ) -> Result<Self, TrainError> {
        let n = data.full.num_nodes();
        if kind.uses_features() {
            match features {
                None => return Err(TrainError::Invalid(format!("{kind} needs node features"))),
                Some(f) if f.num_nodes() != n => {
                    return Err(TrainError::Invalid(format!(
                        "feature matrix has {} rows for a {n}-node graph",
                        f.num_nodes()
                    )))
                }
                _ => {}
            }
        }
        if matches!(kind, ModelKind::Sage | ModelKind::Gat)
            && cfg.fanout.len() != models.depth(kind)
        {
            return Err(TrainError::Invalid(format!(
                "fanout has {} hops but {kind} has depth {}",
                cfg.fanout.len(),
                models.depth(kind)
            )));
        }
        if cfg.batch_size == 0 || cfg.patience == 0 || cfg.epochs_for(kind) == 0 {
            return Err(TrainError::Invalid(
                "batch_size, patience and epochs must be >= 1".into(),
            ));
        }
        let walks = if kind == ModelKind::Pinsage {
            let p = &models.pinsage;
            [&data.train, &data.val, &data.test]
                .iter()
                .enumerate()
                .map(|(k, s)| {
                    let params = WalkParams {
                        num_walks: p.num_walks,
                        walk_length: p.walk_length,
                        k: p.neighbors,
                        seed: derive(&[seed, 0x3A1C, k as u64]),
                    };
                    precompute_walks(&s.graph, params).map(Some)
                })
                .collect::<Result<_, _>>()?
        } else {
            vec![None, None, None]
        };
        let train_adj = (kind == ModelKind::Lightgcn)
            .then(|| normalized_adjacency(&data.train.graph, models.lightgcn.norm));
        Ok(Session {
            kind,
            models,
            cfg,
            data,
            features,
            walks,
            train_adj,
            seed,
        })
    }

    fn sampler<'s>(&'s self, split: &'s SplitData) -> NeighborSampler<'s> {
        match self.kind {
            ModelKind::Sage | ModelKind::Gat => NeighborSampler::Fanout {
                graph: &split.graph,
                fanout: &self.cfg.fanout,
            },
            ModelKind::Pinsage => NeighborSampler::Importance {
                walks: self.walks[split_index(split.name)]
                    .as_ref()
                    .expect("walks for pinsage"),
                depth: self.models.pinsage.layers,
                cap: self.models.pinsage.neighbors,
            },
            ModelKind::Lightgcn => NeighborSampler::None,
        }
    }

    fn pos_weight(&self) -> f64 {
        self.cfg.loss.pos_weight_for(self.kind)
    }

    fn loss(&self, tape: &mut Tape, z: Var, labels: &[f64]) -> Result<Var, TrainError> {
        let pw = self.pos_weight();
        Ok(match self.cfg.loss.kind {
            LossKind::BceLogits => tape.bce_with_logits(z, labels, pw)?,
            LossKind::Focal => tape.focal_loss(z, labels, self.cfg.loss.gamma, pw)?,
        })
    }

    /// Dropout-free embeddings of the split's nodes plus a global-id to
    /// row map. Sampling seeds depend only on the run seed and chunk, so
    /// repeated calls on the same parameters agree exactly.
    fn embed(&self, model: &Model, split: &SplitData) -> Result<(Matrix, Vec<usize>), TrainError> {
        let n = self.data.full.num_nodes();
        if let Encoder::LightGcn(l) = &model.encoder {
            let adj = self.train_adj.as_ref().expect("lightgcn adjacency");
            let mut tape = Tape::eval();
            let h = if self.data.mode == SplitMode::Inductive {
                // Nodes outside the training split were never trained;
                // give them fresh embeddings as unseen items.
                let mut cold = model.clone();
                let train: HashSet<NodeId> = self.data.train.nodes.iter().copied().collect();
                let unseen: Vec<NodeId> = (0..n as NodeId).filter(|u| !train.contains(u)).collect();
                l.cold_start(&mut cold.store, &unseen, derive(&[self.seed, 0xC0]));
                let h = cold.encode_all(&mut tape, adj)?;
                tape.value(h).clone()
            } else {
                let h = model.encode_all(&mut tape, adj)?;
                tape.value(h).clone()
            };
            return Ok((h, (0..n).collect()));
        }
        let features = self.features.expect("checked in Session::new");
        let sampler = self.sampler(split);
        let dim = self.models.embedding_dim(self.kind);
        let mut out = Matrix::zeros(split.nodes.len(), dim);
        let mut index = vec![usize::MAX; n];
        let chunk = self.cfg.eval_chunk.max(1);
        for (c, nodes) in split.nodes.chunks(chunk).enumerate() {
            let block = sampler
                .block(
                    nodes,
                    derive(&[self.seed, 0xE5A1, split_index(split.name) as u64, c as u64]),
                    None,
                )
                .expect("feature models sample blocks");
            let mut tape = Tape::eval();
            let h = model.encode_block(&mut tape, features, &block)?;
            let hv = tape.value(h);
            for (i, &u) in block.output_nodes().iter().enumerate() {
                let row = c * chunk + i;
                out.row_mut(row).copy_from_slice(hv.row(i));
                index[u as usize] = row;
            }
        }
        Ok((out, index))
    }

    fn logits(
        &self,
        model: &Model,
        emb: &Matrix,
        index: &[usize],
        pairs: &[(NodeId, NodeId)],
    ) -> Result<Vec<f64>, TrainError> {
        let mut tape = Tape::eval();
        let h = tape.constant(emb.clone());
        let rows: Vec<(usize, usize)> = pairs
            .iter()
            .map(|&(u, v)| (index[u as usize], index[v as usize]))
            .collect();
        let z = model.score_pairs(&mut tape, h, &rows)?;
        Ok(tape.value(z).as_slice().to_vec())
    }

    fn evaluate(
        &self,
        model: &Model,
        split: &SplitData,
        ranking: bool,
    ) -> Result<EvalMetrics, TrainError> {
        let (emb, index) = self.embed(model, split)?;
        let pairs: Vec<(NodeId, NodeId)> = split.eval_edges.iter().map(|e| (e.u, e.v)).collect();
        let z = self.logits(model, &emb, &index, &pairs)?;
        let labels = &split.eval_labels;
        let mut tape = Tape::eval();
        let zv = tape.constant(Matrix::column(&z));
        let loss = self.loss(&mut tape, zv, labels)?;
        let probs: Vec<f64> = z.iter().map(|&x| sigmoid(x)).collect();
        let (recall, ndcg) = if ranking {
            let q = self.ranking_queries(model, split, &emb, &index)?;
            (
                Some(recall_at_k(&q, self.cfg.ranking_k)),
                Some(ndcg_at_k(&q, self.cfg.ranking_k)),
            )
        } else {
            (None, None)
        };
        Ok(EvalMetrics {
            loss: tape.value(loss).item(),
            acc: accuracy(&probs, labels),
            auc: auc(&z, labels)?,
            ap: average_precision(&z, labels)?,
            recall_at_k: recall,
            ndcg_at_k: ndcg,
        })
    }

    /// Each node with split positives ranks its true neighbors among up to
    /// `ranking_negatives` seeded non-neighbors from the same split.
    fn ranking_queries(
        &self,
        model: &Model,
        split: &SplitData,
        emb: &Matrix,
        index: &[usize],
    ) -> Result<Vec<RankedQuery>, TrainError> {
        let n = self.data.full.num_nodes();
        let truth = Graph::from_edges(
            n,
            &crate::graph::EdgeList::from_edges(split.positives.clone()),
        )?;
        let mut queries = Vec::new();
        for &u in &split.nodes {
            let rel = truth.neighbors(u);
            if rel.is_empty() {
                continue;
            }
            let mut rng = rng_from(&[self.seed, 0x4A4B, u as u64]);
            let mut chosen: HashSet<NodeId> = HashSet::new();
            let mut negs = Vec::new();
            let budget = 20 * self.cfg.ranking_negatives + 100;
            for _ in 0..budget {
                if negs.len() >= self.cfg.ranking_negatives {
                    break;
                }
                let v = split.nodes[rng.random_range(0..split.nodes.len())];
                if v == u || self.data.full.has_edge(u, v) || !chosen.insert(v) {
                    continue;
                }
                negs.push(v);
            }
            let cands: Vec<(NodeId, NodeId)> = rel.iter().chain(&negs).map(|&v| (u, v)).collect();
            let scores = self.logits(model, emb, index, &cands)?;
            let mut relevant = vec![true; rel.len()];
            relevant.resize(cands.len(), false);
            queries.push(RankedQuery { scores, relevant });
        }
        Ok(queries)
    }

    fn train_epoch(
        &self,
        model: &mut Model,
        adam: &mut Adam,
        epoch: usize,
    ) -> Result<(), TrainError> {
        let split = &self.data.train;
        let loader = LinkLoader {
            positives: &split.positives,
            members: &split.nodes,
            graph: &self.data.full,
            batch_size: self.cfg.batch_size,
            neg_ratio: self.cfg.neg_ratio,
            sampler: self.sampler(split),
            seed: derive(&[self.seed, 0x10AD]),
            exclude_targets: self.cfg.exclude_targets,
        };
        let batches = loader.epoch(epoch as u64)?;
        let lr = self.cfg.schedule.lr_at(self.cfg.lr, (epoch - 1) as u32);
        for (b, batch) in batches.iter().enumerate() {
            let mut tape = Tape::train(DropoutKey {
                seed: self.seed,
                epoch: epoch as u64,
                batch: b as u64,
            });
            let (h, rows): (Var, Vec<(usize, usize)>) = match &batch.block {
                Some(block) => {
                    let features = self.features.expect("checked in Session::new");
                    let h = model.encode_block(&mut tape, features, block)?;
                    let idx = block.output_index();
                    (
                        h,
                        batch.edges.iter().map(|e| (idx[&e.u], idx[&e.v])).collect(),
                    )
                }
                None => {
                    let h = model.encode_all(
                        &mut tape,
                        self.train_adj.as_ref().expect("lightgcn adjacency"),
                    )?;
                    (
                        h,
                        batch
                            .edges
                            .iter()
                            .map(|e| (e.u as usize, e.v as usize))
                            .collect(),
                    )
                }
            };
            let z = model.score_pairs(&mut tape, h, &rows)?;
            let loss = self.loss(&mut tape, z, &batch.labels)?;
            if !tape.value(loss).item().is_finite() {
                return Err(TrainError::NonFiniteLoss { epoch, batch: b });
            }
            let grads = tape.backward(loss)?;
            model.store.accumulate(&tape, &grads);
            adam.step(&mut model.store, lr)?;
        }
        Ok(())
    }
}

/// Trains `kind` on the training split with early stopping on validation
/// AUC, then evaluates the best parameters on validation and test.
pub fn train(
    kind: ModelKind,
    models: &ModelsConfig,
    cfg: &TrainConfig,
    data: &Prepared,
    features: Option<&FeatureMatrix>,
    seed: u64,
) -> Result<TrainOutcome, TrainError> {
    let session = Session::new(kind, models, cfg, data, features, seed)?;
    let mut model = Model::new(
        kind,
        models,
        features,
        data.full.num_nodes(),
        derive(&[seed, 0x30DE]),
    );
    let mut adam = Adam::new(&model.store, cfg.weight_decay);
    let mut stopper = EarlyStopper::new(cfg.patience);
    let mut best = model.snapshot();
    let mut history = Vec::new();
    let mut stopped_early = false;
    for epoch in 1..=cfg.epochs_for(kind) {
        let start = Instant::now();
        session.train_epoch(&mut model, &mut adam, epoch)?;
        let tr = session.evaluate(&model, &data.train, false)?;
        let va = session.evaluate(&model, &data.val, false)?;
        history.push(EpochStats {
            epoch,
            train_loss: tr.loss,
            train_acc: tr.acc,
            train_auc: tr.auc,
            train_ap: tr.ap,
            val_loss: va.loss,
            val_acc: va.acc,
            val_auc: va.auc,
            val_ap: va.ap,
            seconds: start.elapsed().as_secs_f64(),
        });
        if stopper.update(epoch, va.auc) {
            best = model.snapshot();
        }
        if stopper.should_stop() {
            stopped_early = true;
            break;
        }
    }
    model.restore(&best);
    let val = session.evaluate(&model, &data.val, false)?;
    let test = session.evaluate(&model, &data.test, true)?;
    Ok(TrainOutcome {
        kind,
        seed,
        history,
        best_epoch: stopper.best_epoch.unwrap_or(0),
        best_val_auc: stopper.best,
        stopped_early,
        val,
        test,
        model,
    })
}

/// Evaluates `model` on one split of `data` (`"train"`, `"val"` or
/// `"test"`), with ranking metrics when `ranking` is set.
#[allow(clippy::too_many_arguments)]
pub fn evaluate(
    model: &Model,
    models: &ModelsConfig,
    cfg: &TrainConfig,
    data: &Prepared,
    features: Option<&FeatureMatrix>,
    split: &str,
    ranking: bool,
    seed: u64,
) -> Result<EvalMetrics, TrainError> {
    let session = Session::new(model.kind, models, cfg, data, features, seed)?;
    let part = match split {
        "train" => &data.train,
        "val" => &data.val,
        "test" => &data.test,
        other => return Err(TrainError::Invalid(format!("unknown split '{other}'"))),
    };
    session.evaluate(model, part, ranking)
}
