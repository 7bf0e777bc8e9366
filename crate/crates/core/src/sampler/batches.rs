//! Per-epoch link mini-batches with fresh negatives.

use std::collections::HashSet;

use rand::seq::SliceRandom;

use super::fanout::sample_block_excluding;
use super::walks::{importance_block, WalkTable};
use crate::graph::{draw_non_edges, node_mask, Edge, Graph, GraphError, NodeId};
use crate::models::Block;
use crate::rng::derive;

/// How each batch's computation block is built.
#[derive(Debug, Clone, Copy)]
pub enum NeighborSampler<'a> {
    /// Uniform fan-out over `graph`.
    Fanout {
        graph: &'a Graph,
        fanout: &'a [usize],
    },
    /// Walk-table neighborhoods with importance weights.
    Importance {
        walks: &'a WalkTable,
        depth: usize,
        cap: usize,
    },
    /// No block; the model scores from node-level state.
    None,
}

impl NeighborSampler<'_> {
    pub fn block(
        &self,
        seeds: &[NodeId],
        seed: u64,
        exclude: Option<&HashSet<Edge>>,
    ) -> Option<Block> {
        match *self {
            NeighborSampler::Fanout { graph, fanout } => {
                Some(sample_block_excluding(graph, seeds, fanout, seed, exclude))
            }
            NeighborSampler::Importance { walks, depth, cap } => match exclude {
                Some(ex) => {
                    let t =
                        walks.restricted(|u, v| Edge::new(u, v).is_none_or(|e| !ex.contains(&e)));
                    Some(importance_block(&t, seeds, depth, cap, seed))
                }
                None => Some(importance_block(walks, seeds, depth, cap, seed)),
            },
            NeighborSampler::None => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkBatch {
    pub edges: Vec<Edge>,
    pub labels: Vec<f64>,
    /// Covers every endpoint among its output nodes.
    pub block: Option<Block>,
}

impl LinkBatch {
    pub fn endpoints(&self) -> Vec<NodeId> {
        self.edges.iter().flat_map(|e| [e.u, e.v]).collect()
    }
}

/// Draws batches over one split: `positives` are that split's target edges
/// and negatives are rejection-sampled among `members`.
#[derive(Debug, Clone)]
pub struct LinkLoader<'a> {
    pub positives: &'a [Edge],
    pub members: &'a [NodeId],
    /// Full positive graph, used to reject sampled negatives.
    pub graph: &'a Graph,
    pub batch_size: usize,
    pub neg_ratio: f64,
    pub sampler: NeighborSampler<'a>,
    pub seed: u64,
    /// Drop each batch's own positive edges from its sampled neighborhoods.
    pub exclude_targets: bool,
}

#[derive(Debug, Clone)]
pub struct EpochBatches<'l, 'a> {
    loader: &'l LinkLoader<'a>,
    epoch: u64,
    pub edges: Vec<Edge>,
    pub labels: Vec<f64>,
}

impl<'a> LinkLoader<'a> {
    /// Labeled edges of one epoch: positives plus `ceil(neg_ratio * |pos|)`
    /// fresh negatives, shuffled together.
    pub fn epoch(&self, epoch: u64) -> Result<EpochBatches<'_, 'a>, GraphError> {
        if self.batch_size == 0 {
            return Err(GraphError::InvalidRatio(0.0));
        }
        if !(self.neg_ratio > 0.0) {
            return Err(GraphError::InvalidRatio(self.neg_ratio));
        }
        let wanted = (self.neg_ratio * self.positives.len() as f64).ceil() as usize;
        let mask = node_mask(self.graph.num_nodes(), self.members);
        let k = self.members.len();
        let available = k * k.saturating_sub(1) / 2 - self.graph.count_edges_within(&mask);
        if wanted > available {
            return Err(GraphError::ExhaustedComplement {
                requested: wanted,
                available,
            });
        }
        let neg = draw_non_edges(
            self.graph,
            self.members,
            wanted,
            derive(&[self.seed, epoch, 1]),
        )?;
        let mut pairs: Vec<(Edge, f64)> = self
            .positives
            .iter()
            .map(|&e| (e, 1.0))
            .chain(neg.iter().map(|&e| (e, 0.0)))
            .collect();
        pairs.shuffle(&mut crate::rng::rng(derive(&[self.seed, epoch, 2])));
        let (edges, labels) = pairs.into_iter().unzip();
        Ok(EpochBatches {
            loader: self,
            epoch,
            edges,
            labels,
        })
    }
}

impl EpochBatches<'_, '_> {
    pub fn len(&self) -> usize {
        self.edges.len().div_ceil(self.loader.batch_size)
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn batch(&self, i: usize) -> LinkBatch {
        let bs = self.loader.batch_size;
        let range = i * bs..((i + 1) * bs).min(self.edges.len());
        let edges = self.edges[range.clone()].to_vec();
        let labels = self.labels[range].to_vec();
        let seeds: Vec<NodeId> = edges.iter().flat_map(|e| [e.u, e.v]).collect();
        let exclude: Option<HashSet<Edge>> = self.loader.exclude_targets.then(|| {
            edges
                .iter()
                .zip(&labels)
                .filter(|(_, &l)| l > 0.5)
                .map(|(e, _)| *e)
                .collect()
        });
        let block = self.loader.sampler.block(
            &seeds,
            derive(&[self.loader.seed, self.epoch, 3, i as u64]),
            exclude.as_ref(),
        );
        LinkBatch {
            edges,
            labels,
            block,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = LinkBatch> + '_ {
        (0..self.len()).map(|i| self.batch(i))
    }
}

/// Every batch of one epoch, materialized.
pub fn link_batches(loader: &LinkLoader<'_>, epoch: u64) -> Result<Vec<LinkBatch>, GraphError> {
    Ok(loader.epoch(epoch)?.iter().collect())
}
