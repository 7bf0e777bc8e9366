use std::collections::HashSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{node_mask, Edge, EdgeList, Graph, GraphError, LabeledEdgeSet, NodeId};

/// Node-level partition; `train` and `test` are sorted and disjoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSplit {
    pub train: Vec<NodeId>,
    pub test: Vec<NodeId>,
    pub ratio: f64,
    pub seed: u64,
}

impl NodeSplit {
    pub fn num_nodes(&self) -> usize {
        self.train.len() + self.test.len()
    }

    pub fn train_mask(&self) -> Vec<bool> {
        node_mask(self.num_nodes(), &self.train)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SplitMode {
    #[default]
    Inductive,
    Transductive,
}

/// Uniformly random node partition with `round(ratio * N)` training nodes.
pub fn inductive_node_split(graph: &Graph, ratio: f64, seed: u64) -> Result<NodeSplit, GraphError> {
    split_nodes((0..graph.num_nodes() as NodeId).collect(), ratio, seed)
}

fn split_nodes(mut nodes: Vec<NodeId>, ratio: f64, seed: u64) -> Result<NodeSplit, GraphError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(GraphError::InvalidRatio(ratio));
    }
    let n_train = (ratio * nodes.len() as f64).round() as usize;
    nodes.shuffle(&mut crate::rng::rng(seed));
    let mut test = nodes.split_off(n_train);
    nodes.sort_unstable();
    test.sort_unstable();
    Ok(NodeSplit {
        train: nodes,
        test,
        ratio,
        seed,
    })
}

/// Concatenates positives (label 1) and negatives (label 0).
pub fn make_labeled(pos: &EdgeList, neg: &EdgeList) -> Result<LabeledEdgeSet, GraphError> {
    let pos_set: HashSet<&Edge> = pos.iter().collect();
    if let Some(e) = neg.iter().find(|e| pos_set.contains(e)) {
        return Err(GraphError::Overlap(e.u, e.v));
    }
    let mut out = LabeledEdgeSet::default();
    for e in pos {
        out.push(*e, 1);
    }
    for e in neg {
        out.push(*e, 0);
    }
    Ok(out)
}

/// Keeps train–train edges in the first output and test–test edges in the
/// second; edges crossing the split are counted and discarded.
pub fn filter_edges_by_split(
    edges: &LabeledEdgeSet,
    split: &NodeSplit,
) -> (LabeledEdgeSet, LabeledEdgeSet, usize) {
    let n = edges
        .edges
        .iter()
        .map(|e| e.v as usize + 1)
        .max()
        .unwrap_or(0)
        .max(split.num_nodes());
    let train = node_mask(n, &split.train);
    let test = node_mask(n, &split.test);
    let mut out_train = LabeledEdgeSet::default();
    let mut out_test = LabeledEdgeSet::default();
    let mut dropped = 0;
    for (e, l) in edges.iter() {
        let (u, v) = (e.u as usize, e.v as usize);
        if train[u] && train[v] {
            out_train.push(e, l);
        } else if test[u] && test[v] {
            out_test.push(e, l);
        } else {
            dropped += 1;
        }
    }
    (out_train, out_test, dropped)
}

/// Train / validation / test node sets. Validation is carved out of the
/// training side so the test nodes stay untouched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreeWaySplit {
    pub train: Vec<NodeId>,
    pub val: Vec<NodeId>,
    pub test: Vec<NodeId>,
}

/// `train_within` is the share of the outer training side kept for training;
/// the rest becomes validation.
pub fn three_way_split(
    graph: &Graph,
    ratio: f64,
    train_within: f64,
    seed: u64,
) -> Result<ThreeWaySplit, GraphError> {
    let outer = inductive_node_split(graph, ratio, seed)?;
    let inner = split_nodes(outer.train, train_within, crate::rng::derive(&[seed, 1]))?;
    Ok(ThreeWaySplit {
        train: inner.train,
        val: inner.test,
        test: outer.test,
    })
}

/// Edge-level (transductive) split. All nodes stay visible.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSplits {
    pub train: EdgeList,
    pub val: EdgeList,
    pub test: EdgeList,
}

pub fn edge_split(
    edges: &EdgeList,
    val_frac: f64,
    test_frac: f64,
    seed: u64,
) -> Result<EdgeSplits, GraphError> {
    for f in [val_frac, test_frac] {
        if !(0.0..1.0).contains(&f) {
            return Err(GraphError::InvalidRatio(f));
        }
    }
    if val_frac + test_frac >= 1.0 {
        return Err(GraphError::InvalidRatio(val_frac + test_frac));
    }
    let mut all = edges.as_slice().to_vec();
    all.shuffle(&mut crate::rng::rng(seed));
    let n_val = (val_frac * all.len() as f64).round() as usize;
    let n_test = (test_frac * all.len() as f64).round() as usize;
    let test = all.split_off(all.len() - n_test);
    let val = all.split_off(all.len() - n_val);
    Ok(EdgeSplits {
        train: EdgeList::from_edges(all),
        val: EdgeList::from_edges(val),
        test: EdgeList::from_edges(test),
    })
}
