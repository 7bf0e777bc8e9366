//! Split plans and the per-split training/evaluation views built from them.

use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::graph::{
    draw_non_edges, edge_split, node_mask, three_way_split, Edge, EdgeList, Graph, GraphError,
    NodeId, SplitMode,
};
use crate::rng::derive;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitConfig {
    pub mode: SplitMode,
    /// Fraction of nodes (inductive) or edges (transductive) kept for
    /// training plus validation.
    pub ratio: f64,
    /// Fraction of that training side held out for validation.
    pub val_ratio: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            mode: SplitMode::Inductive,
            ratio: 0.8,
            val_ratio: 0.1,
            seed: 0,
        }
    }
}

/// Node and edge membership of train / validation / test. In inductive
/// mode each edge list holds exactly the edges inside its node set; in
/// transductive mode every node set is the whole graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub config: SplitConfig,
    pub train_nodes: Vec<NodeId>,
    pub val_nodes: Vec<NodeId>,
    pub test_nodes: Vec<NodeId>,
    pub train_edges: Vec<(NodeId, NodeId)>,
    pub val_edges: Vec<(NodeId, NodeId)>,
    pub test_edges: Vec<(NodeId, NodeId)>,
    /// Edges dropped because they cross node sets (inductive only).
    pub dropped_cross_edges: usize,
}

fn pairs(edges: &EdgeList) -> Vec<(NodeId, NodeId)> {
    edges.iter().map(|e| (e.u, e.v)).collect()
}

pub fn plan_split(graph: &Graph, cfg: &SplitConfig) -> Result<SplitPlan, GraphError> {
    let n = graph.num_nodes();
    match cfg.mode {
        SplitMode::Inductive => {
            let s = three_way_split(graph, cfg.ratio, 1.0 - cfg.val_ratio, cfg.seed)?;
            let within = |nodes: &[NodeId]| pairs(&graph.induced(&node_mask(n, nodes)).edges());
            let (train_edges, val_edges, test_edges) =
                (within(&s.train), within(&s.val), within(&s.test));
            let dropped =
                graph.num_edges() - train_edges.len() - val_edges.len() - test_edges.len();
            Ok(SplitPlan {
                config: cfg.clone(),
                train_nodes: s.train,
                val_nodes: s.val,
                test_nodes: s.test,
                train_edges,
                val_edges,
                test_edges,
                dropped_cross_edges: dropped,
            })
        }
        SplitMode::Transductive => {
            let test_frac = 1.0 - cfg.ratio;
            let val_frac = cfg.ratio * cfg.val_ratio;
            let s = edge_split(&graph.edges(), val_frac, test_frac, cfg.seed)?;
            let all: Vec<NodeId> = (0..n as NodeId).collect();
            Ok(SplitPlan {
                config: cfg.clone(),
                train_nodes: all.clone(),
                val_nodes: all.clone(),
                test_nodes: all,
                train_edges: pairs(&s.train),
                val_edges: pairs(&s.val),
                test_edges: pairs(&s.test),
                dropped_cross_edges: 0,
            })
        }
    }
}

/// Everything one split contributes to training or evaluation.
#[derive(Debug, Clone)]
pub struct SplitData {
    pub name: &'static str,
    pub nodes: Vec<NodeId>,
    pub positives: Vec<Edge>,
    /// Message-passing graph for this split.
    pub graph: Graph,
    /// Fixed labeled pairs used for per-epoch metrics.
    pub eval_edges: Vec<Edge>,
    pub eval_labels: Vec<f64>,
}

/// The full graph plus the three split views.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub mode: SplitMode,
    pub full: Graph,
    pub train: SplitData,
    pub val: SplitData,
    pub test: SplitData,
}

impl Prepared {
    /// Builds message-passing graphs and fixed evaluation sets. Negatives
    /// for each split are drawn once among its nodes and never coincide
    /// with any edge of `full`.
    pub fn new(
        full: &Graph,
        plan: &SplitPlan,
        eval_neg_ratio: f64,
        seed: u64,
    ) -> Result<Self, TrainError> {
        let n = full.num_nodes();
        let to_edges = |p: &[(NodeId, NodeId)]| -> Result<Vec<Edge>, TrainError> {
            p.iter()
                .map(|&(a, b)| match Edge::new(a, b) {
                    Some(e) if (e.v as usize) < n && full.has_edge(e.u, e.v) => Ok(e),
                    _ => Err(TrainError::Invalid(format!(
                        "split edge ({a}, {b}) is not a graph edge"
                    ))),
                })
                .collect()
        };
        let train_graph =
            Graph::from_edges(n, &EdgeList::from_edges(to_edges(&plan.train_edges)?))?;
        let mut parts = Vec::new();
        for (k, (name, nodes, edges)) in [
            ("train", &plan.train_nodes, &plan.train_edges),
            ("val", &plan.val_nodes, &plan.val_edges),
            ("test", &plan.test_nodes, &plan.test_edges),
        ]
        .into_iter()
        .enumerate()
        {
            let positives = to_edges(edges)?;
            if positives.is_empty() {
                return Err(TrainError::Invalid(format!(
                    "{name} split has no positive edges"
                )));
            }
            let graph = match plan.config.mode {
                SplitMode::Inductive => {
                    Graph::from_edges(n, &EdgeList::from_edges(positives.clone()))?
                }
                SplitMode::Transductive => train_graph.clone(),
            };
            let wanted = (eval_neg_ratio * positives.len() as f64).ceil() as usize;
            let mask = node_mask(n, nodes);
            let k_nodes = nodes.len();
            let available =
                k_nodes * k_nodes.saturating_sub(1) / 2 - full.count_edges_within(&mask);
            if wanted > available {
                return Err(GraphError::ExhaustedComplement {
                    requested: wanted,
                    available,
                }
                .into());
            }
            let neg = draw_non_edges(full, nodes, wanted, derive(&[seed, 0xE7A1, k as u64]))?;
            let mut eval_edges = positives.clone();
            eval_edges.extend(neg.iter().copied());
            let mut eval_labels = vec![1.0; positives.len()];
            eval_labels.resize(eval_edges.len(), 0.0);
            parts.push(SplitData {
                name,
                nodes: nodes.clone(),
                positives,
                graph,
                eval_edges,
                eval_labels,
            });
        }
        let test = parts.pop().expect("three parts");
        let val = parts.pop().expect("three parts");
        let train = parts.pop().expect("three parts");
        Ok(Prepared {
            mode: plan.config.mode,
            full: full.clone(),
            train,
            val,
            test,
        })
    }
}
