//! Random-walk neighborhoods and importance-weighted blocks.

use std::collections::HashMap;
use std::io::{Read, Write};

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::graph::{Graph, GraphError, NodeId};
use crate::models::block::{dedup_keep_order, expand};
use crate::models::Block;

pub const WLK_MAGIC: &[u8; 4] = b"WLK1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WalkParams {
    pub num_walks: usize,
    pub walk_length: usize,
    pub k: usize,
    pub seed: u64,
}

impl Default for WalkParams {
    fn default() -> Self {
        WalkParams {
            num_walks: 15,
            walk_length: 5,
            k: 8,
            seed: 0,
        }
    }
}

/// Per node: up to `k` most visited nodes with visit-share weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkTable {
    pub params: WalkParams,
    entries: Vec<Vec<(NodeId, f64)>>,
}

impl WalkTable {
    pub fn num_nodes(&self) -> usize {
        self.entries.len()
    }

    pub fn entry(&self, u: NodeId) -> &[(NodeId, f64)] {
        &self.entries[u as usize]
    }

    /// Builds a table from explicit entries, normalizing weights.
    pub fn from_entries(params: WalkParams, entries: Vec<Vec<(NodeId, f64)>>) -> Self {
        let entries = entries.into_iter().map(normalize).collect();
        WalkTable { params, entries }
    }

    /// Copy with every entry restricted to nodes accepted by `keep`.
    pub fn restricted(&self, keep: impl Fn(NodeId, NodeId) -> bool) -> WalkTable {
        let entries = self
            .entries
            .iter()
            .enumerate()
            .map(|(u, e)| {
                normalize(
                    e.iter()
                        .copied()
                        .filter(|&(v, _)| keep(u as NodeId, v))
                        .collect(),
                )
            })
            .collect();
        WalkTable {
            params: self.params,
            entries,
        }
    }
}

fn normalize(mut e: Vec<(NodeId, f64)>) -> Vec<(NodeId, f64)> {
    let total: f64 = e.iter().map(|p| p.1).sum();
    if total > 0.0 {
        e.iter_mut().for_each(|p| p.1 /= total);
    } else {
        e.clear();
    }
    e
}

/// Simulates `num_walks` uniform walks of `walk_length` steps from every
/// node, counting every visit to a node other than the start.
pub fn precompute_walks(graph: &Graph, p: WalkParams) -> Result<WalkTable, GraphError> {
    if p.num_walks == 0 || p.walk_length == 0 || p.k == 0 {
        return Err(GraphError::InvalidRatio(0.0));
    }
    let n = graph.num_nodes();
    let mut entries = Vec::with_capacity(n);
    let mut counts: HashMap<NodeId, u32> = HashMap::new();
    for start in 0..n as NodeId {
        counts.clear();
        let mut rng = crate::rng::rng_from(&[p.seed, start as u64]);
        for _ in 0..p.num_walks {
            let mut cur = start;
            for _ in 0..p.walk_length {
                let nb = graph.neighbors(cur);
                if nb.is_empty() {
                    break;
                }
                cur = nb[rng.random_range(0..nb.len())];
                if cur != start {
                    *counts.entry(cur).or_default() += 1;
                }
            }
        }
        let mut top: Vec<(NodeId, u32)> = counts.iter().map(|(&v, &c)| (v, c)).collect();
        top.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        top.truncate(p.k);
        entries.push(normalize(
            top.into_iter().map(|(v, c)| (v, c as f64)).collect(),
        ));
    }
    Ok(WalkTable { params: p, entries })
}

/// Weighted sampling without replacement (exponential-key method),
/// returning the chosen entries with renormalized weights.
fn weighted_pick(
    entry: &[(NodeId, f64)],
    cap: usize,
    rng: &mut crate::rng::Rng,
) -> Vec<(NodeId, f64)> {
    if entry.len() <= cap {
        return entry.to_vec();
    }
    let mut keyed: Vec<(f64, usize)> = entry
        .iter()
        .enumerate()
        .map(|(i, &(_, w))| {
            let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
            (u.ln() / w, i)
        })
        .collect();
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut chosen: Vec<usize> = keyed.into_iter().take(cap).map(|(_, i)| i).collect();
    chosen.sort_unstable();
    normalize(chosen.into_iter().map(|i| entry[i]).collect())
}

/// Importance-weighted block of `depth` layers drawn from walk entries.
pub fn importance_block(
    walks: &WalkTable,
    seeds: &[NodeId],
    depth: usize,
    cap: usize,
    seed: u64,
) -> Block {
    let mut rng = crate::rng::rng_from(&[seed, 0x1B]);
    let mut dst = dedup_keep_order(seeds);
    let mut layers = Vec::with_capacity(depth);
    for _ in 0..depth {
        let layer = expand(&dst, |u| weighted_pick(walks.entry(u), cap, &mut rng), true);
        dst = layer.src.clone();
        layers.push(layer);
    }
    layers.reverse();
    Block { layers }
}

pub fn write_wlk<W: Write>(mut w: W, t: &WalkTable) -> Result<(), GraphError> {
    w.write_all(WLK_MAGIC)?;
    for x in [t.params.num_walks, t.params.walk_length, t.params.k] {
        w.write_all(&(x as u32).to_le_bytes())?;
    }
    w.write_all(&t.params.seed.to_le_bytes())?;
    w.write_all(&(t.entries.len() as u64).to_le_bytes())?;
    for e in &t.entries {
        w.write_all(&(e.len() as u32).to_le_bytes())?;
        for &(v, wt) in e {
            w.write_all(&v.to_le_bytes())?;
            w.write_all(&(wt as f32).to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a table; weights are renormalized in `f64` after the `f32` trip.
pub fn read_wlk<R: Read>(mut r: R) -> Result<WalkTable, GraphError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let bad = |m: &str| GraphError::CorruptFile(format!("walk table: {m}"));
    let mut pos = 0usize;
    let mut take = |n: usize| -> Result<&[u8], GraphError> {
        let s = bytes.get(pos..pos + n).ok_or_else(|| bad("truncated"))?;
        pos += n;
        Ok(s)
    };
    if take(4)? != WLK_MAGIC {
        return Err(bad("bad magic"));
    }
    let u32_at = |s: &[u8]| u32::from_le_bytes(s.try_into().unwrap());
    let num_walks = u32_at(take(4)?) as usize;
    let walk_length = u32_at(take(4)?) as usize;
    let k = u32_at(take(4)?) as usize;
    let seed = u64::from_le_bytes(take(8)?.try_into().unwrap());
    let n = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
    let mut entries = Vec::with_capacity(n.min(1 << 24));
    for _ in 0..n {
        let c = u32_at(take(4)?) as usize;
        let mut e = Vec::with_capacity(c);
        for _ in 0..c {
            let v = u32_at(take(4)?);
            let w = f32::from_le_bytes(take(4)?.try_into().unwrap()) as f64;
            if v as usize >= n || !(w >= 0.0) {
                return Err(bad("entry out of range"));
            }
            e.push((v, w));
        }
        entries.push(e);
    }
    if take(1).is_ok() {
        return Err(bad("trailing bytes"));
    }
    Ok(WalkTable::from_entries(
        WalkParams {
            num_walks,
            walk_length,
            k,
            seed,
        },
        entries,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::EdgeList;

    fn params(num_walks: usize) -> WalkParams {
        WalkParams {
            num_walks,
            ..WalkParams::default()
        }
    }

    #[test]
    fn forced_walk_on_single_edge() {
        let g = Graph::from_edges(2, &EdgeList::from_pairs([(0, 1)])).unwrap();
        let t = precompute_walks(&g, params(15)).unwrap();
        assert_eq!(t.entry(0), &[(1, 1.0)]);
    }

    #[test]
    fn triangle_is_balanced() {
        let g = Graph::from_edges(3, &EdgeList::from_pairs([(0, 1), (1, 2), (0, 2)])).unwrap();
        let t = precompute_walks(&g, params(10_000)).unwrap();
        for u in 0..3 {
            let e = t.entry(u);
            assert_eq!(e.len(), 2);
            for &(_, w) in e {
                assert!((w - 0.5).abs() < 0.05, "{w}");
            }
        }
    }

    #[test]
    fn isolated_node_has_empty_entry_and_weights_normalized() {
        let g =
            Graph::from_edges(6, &EdgeList::from_pairs([(0, 1), (1, 2), (2, 3), (3, 4)])).unwrap();
        let t = precompute_walks(&g, WalkParams { k: 2, ..params(15) }).unwrap();
        assert!(t.entry(5).is_empty());
        for u in 0..5 {
            let s: f64 = t.entry(u).iter().map(|p| p.1).sum();
            assert!((s - 1.0).abs() < 1e-9);
            assert!(t.entry(u).len() <= 2);
        }
    }

    #[test]
    fn importance_block_weights_and_bounds() {
        let pairs: Vec<(u32, u32)> = (0..10)
            .flat_map(|i| (i + 1..10).map(move |j| (i, j)))
            .collect();
        let g = Graph::from_edges(10, &EdgeList::from_pairs(pairs)).unwrap();
        let t = precompute_walks(&g, params(15)).unwrap();
        let b = importance_block(&t, &[0], 3, 8, 5);
        b.validate().unwrap();
        let total: usize =
            b.layers.iter().map(|l| l.src.len()).sum::<usize>() + b.output_nodes().len();
        assert!(total <= 1 + 8 + 64 + 512);
        let small = importance_block(&t, &[0], 3, 3, 5);
        small.validate().unwrap();
        assert!(small
            .layers
            .iter()
            .all(|l| l.edge_dst.len() <= 3 * l.dst.len()));
    }

    #[test]
    fn few_neighbors_keep_original_weights() {
        let t = WalkTable::from_entries(
            WalkParams::default(),
            vec![vec![(1, 0.75), (2, 0.25)], vec![], vec![]],
        );
        let b = importance_block(&t, &[0], 1, 8, 0);
        assert_eq!(b.layers[0].weights.as_ref().unwrap(), &vec![0.75, 0.25]);
    }

    #[test]
    fn wlk_round_trip() {
        let g = Graph::from_edges(
            5,
            &EdgeList::from_pairs([(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]),
        )
        .unwrap();
        let t = precompute_walks(&g, params(15)).unwrap();
        let mut buf = Vec::new();
        write_wlk(&mut buf, &t).unwrap();
        let back = read_wlk(buf.as_slice()).unwrap();
        assert_eq!(back.params, t.params);
        for u in 0..5 {
            for (a, b) in back.entry(u).iter().zip(t.entry(u)) {
                assert_eq!(a.0, b.0);
                assert!((a.1 - b.1).abs() < 1e-6);
            }
        }
        assert!(read_wlk(&buf[..buf.len() - 1]).is_err());
    }
}
