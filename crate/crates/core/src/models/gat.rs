//! Two-layer multi-head graph attention with self-loops.

use super::init::Init;
use super::{depth_error, Block, BlockLayer};
use crate::autodiff::{AutodiffError, ParamId, ParamStore, Tape, Var};

#[derive(Debug, Clone)]
struct Layer {
    w: ParamId,
    /// `per_head x heads`; column `h` scores the source side of head `h`.
    att_src: ParamId,
    att_dst: ParamId,
    bias: ParamId,
    heads: usize,
    per_head: usize,
    concat: bool,
}

#[derive(Debug, Clone)]
pub struct Gat {
    layers: Vec<Layer>,
    dropout: f64,
    slope: f64,
}

/// Attention coefficients of one head, one row per edge including the
/// appended self-loops.
#[derive(Debug, Clone)]
pub struct Attention {
    pub layer: usize,
    pub head: usize,
    pub alpha: Var,
    pub edge_dst: Vec<usize>,
    pub edge_src: Vec<usize>,
}

/// Edges of `l` plus one self-loop per destination, sorted by destination.
fn with_self_loops(l: &BlockLayer) -> (Vec<usize>, Vec<usize>) {
    let mut pairs: Vec<(usize, usize)> = l
        .edge_dst
        .iter()
        .copied()
        .zip(l.edge_src.iter().copied())
        .collect();
    pairs.extend((0..l.dst.len()).map(|i| (i, i)));
    pairs.sort_by_key(|p| p.0);
    pairs.into_iter().unzip()
}

impl Gat {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn new(
        init: &mut Init<'_>,
        in_dim: usize,
        hidden: usize,
        heads_l1: usize,
        heads_l2: usize,
        out_dim: usize,
        dropout: f64,
        slope: f64,
    ) -> Self {
        let mut layer = |k: usize, fin: usize, heads: usize, per_head: usize, concat: bool| Layer {
            w: init.glorot(&format!("gat.{k}.w"), fin, heads * per_head),
            att_src: init.glorot(&format!("gat.{k}.att_src"), per_head, heads),
            att_dst: init.glorot(&format!("gat.{k}.att_dst"), per_head, heads),
            bias: init.zeros(
                &format!("gat.{k}.b"),
                1,
                if concat { heads * per_head } else { per_head },
            ),
            heads,
            per_head,
            concat,
        };
        let l1 = layer(0, in_dim, heads_l1, hidden, true);
        let l2 = layer(1, heads_l1 * hidden, heads_l2, out_dim, false);
        Gat {
            layers: vec![l1, l2],
            dropout,
            slope,
        }
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn forward(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        x: Var,
        block: &Block,
    ) -> Result<Var, AutodiffError> {
        self.forward_with_attention(tape, store, x, block)
            .map(|(h, _)| h)
    }

    pub fn forward_with_attention(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        x: Var,
        block: &Block,
    ) -> Result<(Var, Vec<Attention>), AutodiffError> {
        if block.depth() != self.depth() {
            return Err(depth_error(block.depth(), self.depth()));
        }
        let mut h = x;
        let mut attn = Vec::new();
        for (k, (layer, bl)) in self.layers.iter().zip(&block.layers).enumerate() {
            let n_dst = bl.dst.len();
            let (edst, esrc) = with_self_loops(bl);
            let input = tape.dropout(h, self.dropout)?;
            let w = tape.param(store, layer.w);
            let z = tape.matmul(input, w)?;
            let a_src = tape.param(store, layer.att_src);
            let a_dst = tape.param(store, layer.att_dst);
            let own: Vec<usize> = (0..n_dst).collect();
            let mut heads = Vec::with_capacity(layer.heads);
            for hd in 0..layer.heads {
                let f = layer.per_head;
                let zh = tape.slice_cols(z, hd * f, (hd + 1) * f)?;
                let zh_dst = tape.row_gather(zh, &own)?;
                let as_h = tape.slice_cols(a_src, hd, hd + 1)?;
                let ad_h = tape.slice_cols(a_dst, hd, hd + 1)?;
                let s_src = tape.matmul(zh, as_h)?;
                let s_dst = tape.matmul(zh_dst, ad_h)?;
                let e_src = tape.row_gather(s_src, &esrc)?;
                let e_dst = tape.row_gather(s_dst, &edst)?;
                let e = tape.add(e_src, e_dst)?;
                let e = tape.leaky_relu(e, self.slope);
                let alpha = tape.segment_softmax(e, &edst, n_dst)?;
                attn.push(Attention {
                    layer: k,
                    head: hd,
                    alpha,
                    edge_dst: edst.clone(),
                    edge_src: esrc.clone(),
                });
                let alpha = tape.dropout(alpha, self.dropout)?;
                let msg = tape.row_gather(zh, &esrc)?;
                let msg = tape.mul_col(msg, alpha)?;
                heads.push(tape.segment_sum(msg, &edst, n_dst)?);
            }
            let combined = if layer.concat {
                tape.concat_cols(&heads)?
            } else {
                let mut acc = heads[0];
                for &x in &heads[1..] {
                    acc = tape.add(acc, x)?;
                }
                tape.scale(acc, 1.0 / heads.len() as f64)
            };
            let b = tape.param(store, layer.bias);
            h = tape.add_row(combined, b)?;
            if layer.concat {
                h = tape.elu(h);
            }
        }
        Ok((h, attn))
    }
}
