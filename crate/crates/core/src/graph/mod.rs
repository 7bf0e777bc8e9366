//! Undirected item graph, edge sets, negative sampling and node splits.

mod build;
mod io;
mod negatives;
mod split;

use std::collections::HashMap;

use thiserror::Error;

pub use build::build_positive_edges;
pub use io::{
    read_copg, read_labeled_tsv, write_copg, write_copg_file, write_labeled_tsv, COPG_MAGIC,
};
pub(crate) use negatives::draw_non_edges;
pub use negatives::sample_negative_edges;
pub use split::{
    edge_split, filter_edges_by_split, inductive_node_split, make_labeled, three_way_split,
    EdgeSplits, NodeSplit, SplitMode, ThreeWaySplit,
};

pub type NodeId = u32;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("similar list of {from} references {missing}, which is not in the table")]
    DanglingReference { from: String, missing: String },
    #[error("requested {requested} negative edges but only {available} non-edges exist")]
    ExhaustedComplement { requested: usize, available: usize },
    #[error("edge ({0}, {1}) is labeled both positive and negative")]
    Overlap(NodeId, NodeId),
    #[error("invalid ratio {0}")]
    InvalidRatio(f64),
    #[error("node {node} out of range for graph with {num_nodes} nodes")]
    NodeOutOfRange { node: NodeId, num_nodes: usize },
    #[error("corrupt graph file: {0}")]
    CorruptFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Undirected edge stored with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub u: NodeId,
    pub v: NodeId,
}

impl Edge {
    /// Canonical form of an unordered pair. Returns `None` for self-loops.
    pub fn new(a: NodeId, b: NodeId) -> Option<Edge> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Some(Edge { u: a, v: b }),
            std::cmp::Ordering::Greater => Some(Edge { u: b, v: a }),
            std::cmp::Ordering::Equal => None,
        }
    }
}

/// Sorted, deduplicated list of canonical edges.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EdgeList {
    edges: Vec<Edge>,
}

impl EdgeList {
    pub fn from_pairs<I: IntoIterator<Item = (NodeId, NodeId)>>(pairs: I) -> Self {
        let mut edges: Vec<Edge> = pairs
            .into_iter()
            .filter_map(|(a, b)| Edge::new(a, b))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        EdgeList { edges }
    }

    pub fn from_edges(mut edges: Vec<Edge>) -> Self {
        edges.sort_unstable();
        edges.dedup();
        EdgeList { edges }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn as_slice(&self) -> &[Edge] {
        &self.edges
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Edge> {
        self.edges.iter()
    }

    pub fn contains(&self, e: &Edge) -> bool {
        self.edges.binary_search(e).is_ok()
    }
}

impl<'a> IntoIterator for &'a EdgeList {
    type Item = &'a Edge;
    type IntoIter = std::slice::Iter<'a, Edge>;
    fn into_iter(self) -> Self::IntoIter {
        self.edges.iter()
    }
}

/// Edges paired with binary labels (1 = observed link, 0 = sampled non-link).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledEdgeSet {
    pub edges: Vec<Edge>,
    pub labels: Vec<u8>,
}

impl LabeledEdgeSet {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn positives(&self) -> impl Iterator<Item = Edge> + '_ {
        self.iter().filter(|(_, l)| *l == 1).map(|(e, _)| e)
    }

    pub fn negatives(&self) -> impl Iterator<Item = Edge> + '_ {
        self.iter().filter(|(_, l)| *l == 0).map(|(e, _)| e)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Edge, u8)> + '_ {
        self.edges.iter().copied().zip(self.labels.iter().copied())
    }

    pub fn push(&mut self, e: Edge, label: u8) {
        self.edges.push(e);
        self.labels.push(label);
    }

    /// Deterministic Fisher-Yates shuffle of the (edge, label) pairs.
    pub fn shuffle(&mut self, seed: u64) {
        use rand::seq::SliceRandom;
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.shuffle(&mut crate::rng::rng(seed));
        self.edges = order.iter().map(|&i| self.edges[i]).collect();
        self.labels = order.iter().map(|&i| self.labels[i]).collect();
    }
}

/// asin ↔ dense node id mapping.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NodeIndex {
    names: Vec<String>,
    ids: HashMap<String, NodeId>,
}

impl NodeIndex {
    pub fn new(names: Vec<String>) -> Self {
        let ids = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i as NodeId))
            .collect();
        NodeIndex { names, ids }
    }

    pub fn id(&self, name: &str) -> Option<NodeId> {
        self.ids.get(name).copied()
    }

    pub fn name(&self, id: NodeId) -> Option<&str> {
        self.names.get(id as usize).map(String::as_str)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// Immutable undirected graph in compressed sparse row form.
///
/// Each undirected edge is stored twice (once per endpoint). Neighbor lists
/// are sorted ascending, free of duplicates and self-loops.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<NodeId>,
    index: Option<NodeIndex>,
}

impl Graph {
    pub fn from_edges(num_nodes: usize, edges: &EdgeList) -> Result<Self, GraphError> {
        let mut degree = vec![0usize; num_nodes];
        for e in edges {
            for n in [e.u, e.v] {
                if n as usize >= num_nodes {
                    return Err(GraphError::NodeOutOfRange { node: n, num_nodes });
                }
            }
            degree[e.u as usize] += 1;
            degree[e.v as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(num_nodes + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..num_nodes].to_vec();
        let mut neighbors = vec![0 as NodeId; offsets[num_nodes]];
        for e in edges {
            neighbors[fill[e.u as usize]] = e.v;
            fill[e.u as usize] += 1;
            neighbors[fill[e.v as usize]] = e.u;
            fill[e.v as usize] += 1;
        }
        for u in 0..num_nodes {
            neighbors[offsets[u]..offsets[u + 1]].sort_unstable();
        }
        Ok(Graph {
            offsets,
            neighbors,
            index: None,
        })
    }

    pub fn with_index(mut self, index: NodeIndex) -> Self {
        self.index = Some(index);
        self
    }

    pub fn index(&self) -> Option<&NodeIndex> {
        self.index.as_ref()
    }

    pub fn num_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn neighbors(&self, u: NodeId) -> &[NodeId] {
        let u = u as usize;
        &self.neighbors[self.offsets[u]..self.offsets[u + 1]]
    }

    pub fn degree(&self, u: NodeId) -> usize {
        let u = u as usize;
        self.offsets[u + 1] - self.offsets[u]
    }

    pub fn has_edge(&self, a: NodeId, b: NodeId) -> bool {
        if a as usize >= self.num_nodes() || b as usize >= self.num_nodes() {
            return false;
        }
        self.neighbors(a).binary_search(&b).is_ok()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// All undirected edges in canonical order.
    pub fn edges(&self) -> EdgeList {
        let mut edges = Vec::with_capacity(self.num_edges());
        for u in 0..self.num_nodes() as NodeId {
            for &v in self.neighbors(u) {
                if u < v {
                    edges.push(Edge { u, v });
                }
            }
        }
        EdgeList { edges }
    }

    /// Same node id space, keeping only edges whose endpoints are both in `keep`.
    pub fn induced(&self, keep: &[bool]) -> Graph {
        let edges = self
            .edges()
            .edges
            .into_iter()
            .filter(|e| keep[e.u as usize] && keep[e.v as usize])
            .collect();
        let mut g = Graph::from_edges(self.num_nodes(), &EdgeList { edges })
            .expect("induced subgraph stays in range");
        g.index = self.index.clone();
        g
    }

    /// Number of edges with both endpoints in `keep`.
    pub fn count_edges_within(&self, keep: &[bool]) -> usize {
        (0..self.num_nodes() as NodeId)
            .filter(|&u| keep[u as usize])
            .map(|u| {
                self.neighbors(u)
                    .iter()
                    .filter(|&&v| v > u && keep[v as usize])
                    .count()
            })
            .sum()
    }
}

/// Membership mask of length `n` for a node list.
pub fn node_mask(n: usize, nodes: &[NodeId]) -> Vec<bool> {
    let mut mask = vec![false; n];
    for &u in nodes {
        mask[u as usize] = true;
    }
    mask
}
