//! GraphSAGE-style layers, shared by the uniform-mean and the
//! walk-weighted (PinSAGE) encoders.

use super::init::Init;
use super::{depth_error, Block};
use crate::autodiff::{AutodiffError, ParamId, ParamStore, Tape, Var};

#[derive(Debug, Clone)]
struct Layer {
    w_self: ParamId,
    w_neigh: ParamId,
    bias: ParamId,
}

#[derive(Debug, Clone)]
pub struct SageStack {
    layers: Vec<Layer>,
    dropout: f64,
    /// Use the block's edge weights instead of the neighbor mean.
    weighted: bool,
    /// Concatenate self and neighbor terms before a single projection.
    concat: bool,
}

impl SageStack {
    pub(crate) fn new(
        init: &mut Init<'_>,
        prefix: &str,
        dims: &[usize],
        dropout: f64,
        weighted: bool,
        concat: bool,
    ) -> Self {
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(k, w)| {
                if concat {
                    let w_cat = init.glorot(&format!("{prefix}.{k}.w"), 2 * w[0], w[1]);
                    Layer {
                        w_self: w_cat,
                        w_neigh: w_cat,
                        bias: init.zeros(&format!("{prefix}.{k}.b"), 1, w[1]),
                    }
                } else {
                    Layer {
                        w_self: init.glorot(&format!("{prefix}.{k}.w_self"), w[0], w[1]),
                        w_neigh: init.glorot(&format!("{prefix}.{k}.w_neigh"), w[0], w[1]),
                        bias: init.zeros(&format!("{prefix}.{k}.b"), 1, w[1]),
                    }
                }
            })
            .collect();
        SageStack {
            layers,
            dropout,
            weighted,
            concat,
        }
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// `x` holds one row per `block.input_nodes()`; the result has one row
    /// per `block.output_nodes()`.
    pub fn forward(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        x: Var,
        block: &Block,
    ) -> Result<Var, AutodiffError> {
        if block.depth() != self.depth() {
            return Err(depth_error(block.depth(), self.depth()));
        }
        let mut h = x;
        let last = self.layers.len() - 1;
        for (k, (layer, bl)) in self.layers.iter().zip(&block.layers).enumerate() {
            let agg = bl.aggregation(self.weighted);
            let neigh = tape.spmm(h, &agg)?;
            let own: Vec<usize> = (0..bl.dst.len()).collect();
            let self_rows = tape.row_gather(h, &own)?;
            let z = if self.concat {
                let cat = tape.concat_cols(&[self_rows, neigh])?;
                let w = tape.param(store, layer.w_self);
                tape.matmul(cat, w)?
            } else {
                let ws = tape.param(store, layer.w_self);
                let wn = tape.param(store, layer.w_neigh);
                let a = tape.matmul(self_rows, ws)?;
                let b = tape.matmul(neigh, wn)?;
                tape.add(a, b)?
            };
            let b = tape.param(store, layer.bias);
            h = tape.add_row(z, b)?;
            if k < last {
                h = tape.relu(h);
                h = tape.dropout(h, self.dropout)?;
            }
        }
        Ok(h)
    }
}
