use std::collections::HashSet;

use rand::seq::index;

use crate::graph::{Edge, Graph, NodeId};
use crate::models::block::{dedup_keep_order, expand};
use crate::models::Block;

/// Uniform fan-out sampling. `fanout[h]` caps the neighbors drawn per node
/// at hop `h + 1` from the seeds; each node keeps `min(deg, cap)` distinct
/// neighbors.
pub fn sample_block(graph: &Graph, seeds: &[NodeId], fanout: &[usize], seed: u64) -> Block {
    sample_block_excluding(graph, seeds, fanout, seed, None)
}

/// As [`sample_block`], never traversing an edge in `exclude`.
pub fn sample_block_excluding(
    graph: &Graph,
    seeds: &[NodeId],
    fanout: &[usize],
    seed: u64,
    exclude: Option<&HashSet<Edge>>,
) -> Block {
    let mut rng = crate::rng::rng_from(&[seed, 0x5A3]);
    let mut dst = dedup_keep_order(seeds);
    let mut layers = Vec::with_capacity(fanout.len());
    for &cap in fanout {
        let layer = expand(
            &dst,
            |u| {
                let all = graph.neighbors(u);
                let allowed: Vec<NodeId> = match exclude {
                    Some(ex) => all
                        .iter()
                        .copied()
                        .filter(|&v| Edge::new(u, v).is_none_or(|e| !ex.contains(&e)))
                        .collect(),
                    None => all.to_vec(),
                };
                let chosen = if allowed.len() <= cap {
                    allowed
                } else {
                    let mut idx = index::sample(&mut rng, allowed.len(), cap).into_vec();
                    idx.sort_unstable();
                    idx.into_iter().map(|i| allowed[i]).collect()
                };
                chosen.into_iter().map(|v| (v, 1.0)).collect()
            },
            false,
        );
        dst = layer.src.clone();
        layers.push(layer);
    }
    layers.reverse();
    Block { layers }
}
