//! LightGCN propagation over a single item embedding table.

use serde::{Deserialize, Serialize};

use super::init::{normal_rows, Init};
use crate::autodiff::{AutodiffError, ParamId, ParamStore, SparseRows, Tape, Var};
use crate::graph::{Graph, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    Mean,
    #[default]
    Symmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LayerCombination {
    #[default]
    Mean,
    Sum,
}

/// Normalized adjacency as a sparse operator: row `u` averages (mean) or
/// symmetrically weights its neighbors. Isolated nodes have empty rows.
pub fn normalized_adjacency(graph: &Graph, norm: Normalization) -> SparseRows {
    let n = graph.num_nodes();
    let mut sp = SparseRows::new(n);
    for u in 0..n as NodeId {
        let du = graph.degree(u) as f64;
        for &v in graph.neighbors(u) {
            let w = match norm {
                Normalization::Mean => 1.0 / du,
                Normalization::Symmetric => 1.0 / (du * graph.degree(v) as f64).sqrt(),
            };
            sp.push(u as usize, v as usize, w);
        }
    }
    sp
}

#[derive(Debug, Clone)]
pub struct LightGcn {
    pub emb: ParamId,
    pub num_layers: usize,
    pub combination: LayerCombination,
}

impl LightGcn {
    pub(crate) fn new(
        init: &mut Init<'_>,
        num_nodes: usize,
        dim: usize,
        num_layers: usize,
        combination: LayerCombination,
    ) -> Self {
        LightGcn {
            emb: init.embedding("lightgcn.emb", num_nodes, dim),
            num_layers,
            combination,
        }
    }

    /// Final embeddings of every node: combine(E0, A E0, ..., A^K E0).
    pub fn forward(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        adj: &SparseRows,
    ) -> Result<Var, AutodiffError> {
        let e0 = tape.param(store, self.emb);
        let mut cur = e0;
        let mut acc = e0;
        for _ in 0..self.num_layers {
            cur = tape.spmm(cur, adj)?;
            acc = tape.add(acc, cur)?;
        }
        Ok(match self.combination {
            LayerCombination::Sum => acc,
            LayerCombination::Mean => tape.scale(acc, 1.0 / (self.num_layers + 1) as f64),
        })
    }

    /// Redraws the rows of `nodes` from N(0, 0.1^2), as for unseen items.
    pub fn cold_start(&self, store: &mut ParamStore, nodes: &[NodeId], seed: u64) {
        let table = store.value_mut(self.emb);
        let mut rng = crate::rng::rng_from(&[seed, 0xC01D]);
        let fresh = normal_rows(&mut rng, nodes.len(), table.cols());
        for (k, &u) in nodes.iter().enumerate() {
            table.row_mut(u as usize).copy_from_slice(fresh.row(k));
        }
    }
}
