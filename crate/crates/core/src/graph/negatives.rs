use std::collections::HashSet;

use rand::Rng as _;

use super::{Edge, EdgeList, Graph, GraphError, NodeId};

/// Draws `ceil(ratio * |E within restrict_to|)` distinct non-edges whose
/// endpoints both lie in `restrict_to` (all nodes when `None`).
///
/// Rejection sampling: a uniformly drawn pair is discarded when it is a graph
/// edge, a self-pair, or already drawn.
pub fn sample_negative_edges(
    graph: &Graph,
    ratio: f64,
    seed: u64,
    restrict_to: Option<&[NodeId]>,
) -> Result<EdgeList, GraphError> {
    if !(ratio > 0.0) || !ratio.is_finite() {
        return Err(GraphError::InvalidRatio(ratio));
    }
    let n = graph.num_nodes();
    let all: Vec<NodeId>;
    let nodes = match restrict_to {
        Some(nodes) => nodes,
        None => {
            all = (0..n as NodeId).collect();
            &all
        }
    };
    let mut mask = vec![false; n];
    for &u in nodes {
        if u as usize >= n {
            return Err(GraphError::NodeOutOfRange {
                node: u,
                num_nodes: n,
            });
        }
        mask[u as usize] = true;
    }
    let k = mask.iter().filter(|&&b| b).count();
    let positives = graph.count_edges_within(&mask);
    let requested = (ratio * positives as f64).ceil() as usize;
    let pairs = k * k.saturating_sub(1) / 2;
    let available = pairs - positives;
    if requested > available {
        return Err(GraphError::ExhaustedComplement {
            requested,
            available,
        });
    }
    let members: Vec<NodeId> = (0..n as NodeId).filter(|&u| mask[u as usize]).collect();
    draw_non_edges(graph, &members, requested, seed)
}

/// Rejection-samples `count` distinct non-edges among `members`. The caller
/// guarantees enough non-edges exist.
pub(crate) fn draw_non_edges(
    graph: &Graph,
    members: &[NodeId],
    count: usize,
    seed: u64,
) -> Result<EdgeList, GraphError> {
    let mut rng = crate::rng::rng(seed);
    let mut drawn: HashSet<Edge> = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let a = members[rng.random_range(0..members.len())];
        let b = members[rng.random_range(0..members.len())];
        let Some(e) = Edge::new(a, b) else { continue };
        if graph.has_edge(e.u, e.v) || !drawn.insert(e) {
            continue;
        }
        out.push(e);
    }
    Ok(EdgeList::from_edges(out))
}
