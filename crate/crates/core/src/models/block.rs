//! Layered bipartite computation structure consumed by the encoders.

use std::collections::HashMap;

use crate::autodiff::SparseRows;
use crate::graph::{Graph, NodeId};

/// One message-passing layer. `src[..dst.len()] == dst`, so destination
/// `i` reads its own previous representation from source row `i`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BlockLayer {
    pub dst: Vec<NodeId>,
    pub src: Vec<NodeId>,
    /// Local source index per edge.
    pub edge_src: Vec<usize>,
    /// Local destination index per edge, non-decreasing.
    pub edge_dst: Vec<usize>,
    /// Per-edge weights summing to 1 per destination, when present.
    pub weights: Option<Vec<f64>>,
}

impl BlockLayer {
    pub fn num_edges(&self) -> usize {
        self.edge_src.len()
    }

    /// Aggregation operator: the edge weights when `use_weights` is set and
    /// weights are present, otherwise the neighbor mean.
    pub fn aggregation(&self, use_weights: bool) -> SparseRows {
        let mut deg = vec![0usize; self.dst.len()];
        for &d in &self.edge_dst {
            deg[d] += 1;
        }
        let mut sp = SparseRows::new(self.dst.len());
        for k in 0..self.num_edges() {
            let d = self.edge_dst[k];
            let w = match &self.weights {
                Some(ws) if use_weights => ws[k],
                _ => 1.0 / deg[d] as f64,
            };
            sp.push(d, self.edge_src[k], w);
        }
        sp
    }
}

/// Layers ordered outermost first: `layers[0].src` are the input rows and
/// the last layer's `dst` are the seed nodes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Block {
    pub layers: Vec<BlockLayer>,
}

impl Block {
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn input_nodes(&self) -> &[NodeId] {
        &self.layers[0].src
    }

    pub fn output_nodes(&self) -> &[NodeId] {
        &self.layers.last().expect("block has layers").dst
    }

    /// Local output row of every seed.
    pub fn output_index(&self) -> HashMap<NodeId, usize> {
        self.output_nodes()
            .iter()
            .enumerate()
            .map(|(i, &u)| (u, i))
            .collect()
    }

    /// Every neighbor of every frontier node, `depth` hops out.
    pub fn full(graph: &Graph, seeds: &[NodeId], depth: usize) -> Block {
        let mut dst = dedup_keep_order(seeds);
        let mut rev = Vec::with_capacity(depth);
        for _ in 0..depth {
            let layer = expand(
                &dst,
                |u| graph.neighbors(u).iter().map(|&v| (v, 1.0)).collect(),
                false,
            );
            dst = layer.src.clone();
            rev.push(layer);
        }
        rev.reverse();
        Block { layers: rev }
    }

    /// Copy where each destination's incoming weights are `1/degree`.
    pub fn with_uniform_weights(&self) -> Block {
        let mut b = self.clone();
        for l in &mut b.layers {
            l.weights = Some(l.aggregation(false).weight);
        }
        b
    }

    /// Checks the structural invariants; returns a description of the
    /// first violation.
    pub fn validate(&self) -> Result<(), String> {
        if self.layers.is_empty() {
            return Err("block has no layers".into());
        }
        for (k, l) in self.layers.iter().enumerate() {
            if l.src.len() < l.dst.len() || l.src[..l.dst.len()] != l.dst[..] {
                return Err(format!("layer {k}: dst is not a prefix of src"));
            }
            if l.edge_src.len() != l.edge_dst.len() {
                return Err(format!("layer {k}: edge arrays differ in length"));
            }
            if l.edge_src.iter().any(|&s| s >= l.src.len())
                || l.edge_dst.iter().any(|&d| d >= l.dst.len())
            {
                return Err(format!("layer {k}: edge index out of range"));
            }
            if l.edge_dst.windows(2).any(|w| w[0] > w[1]) {
                return Err(format!("layer {k}: edges not sorted by destination"));
            }
            if let Some(ws) = &l.weights {
                if ws.len() != l.num_edges() || ws.iter().any(|&w| !(w >= 0.0)) {
                    return Err(format!("layer {k}: bad weights"));
                }
                let mut sums = vec![0.0; l.dst.len()];
                let mut has = vec![false; l.dst.len()];
                for (&d, &w) in l.edge_dst.iter().zip(ws) {
                    sums[d] += w;
                    has[d] = true;
                }
                if let Some(d) = (0..l.dst.len()).find(|&d| has[d] && (sums[d] - 1.0).abs() > 1e-9)
                {
                    return Err(format!("layer {k}: weights of dst {d} sum to {}", sums[d]));
                }
            }
            if k + 1 < self.layers.len() && self.layers[k + 1].src != l.dst {
                return Err(format!("layer {k}: dst differs from next layer's src"));
            }
        }
        Ok(())
    }
}

pub(crate) fn dedup_keep_order(nodes: &[NodeId]) -> Vec<NodeId> {
    let mut seen = std::collections::HashSet::new();
    nodes.iter().copied().filter(|u| seen.insert(*u)).collect()
}

/// Builds one layer whose destinations are `dst`; `pick` returns each
/// destination's neighbors with weights, kept only when `weighted`.
pub(crate) fn expand(
    dst: &[NodeId],
    mut pick: impl FnMut(NodeId) -> Vec<(NodeId, f64)>,
    weighted: bool,
) -> BlockLayer {
    let mut local: HashMap<NodeId, usize> = dst.iter().enumerate().map(|(i, &u)| (u, i)).collect();
    let mut src = dst.to_vec();
    let mut layer = BlockLayer {
        dst: dst.to_vec(),
        ..Default::default()
    };
    let mut ws = Vec::new();
    for (i, &u) in dst.iter().enumerate() {
        for (v, w) in pick(u) {
            let j = *local.entry(v).or_insert_with(|| {
                src.push(v);
                src.len() - 1
            });
            layer.edge_src.push(j);
            layer.edge_dst.push(i);
            ws.push(w);
        }
    }
    layer.src = src;
    if weighted {
        layer.weights = Some(ws);
    }
    layer
}
