//! `COPG1` binary edge files and `u\tv\tlabel` TSV.
//!
//! `COPG1` layout: the 5 magic bytes, u64 node count, u64 edge count, then
//! one little-endian (u32, u32) pair per undirected edge.

use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Edge, EdgeList, Graph, GraphError, LabeledEdgeSet, NodeId};

pub const COPG_MAGIC: &[u8; 5] = b"COPG1";

pub fn write_copg<W: Write>(graph: &Graph, mut out: W) -> Result<(), GraphError> {
    out.write_all(COPG_MAGIC)?;
    out.write_all(&(graph.num_nodes() as u64).to_le_bytes())?;
    out.write_all(&(graph.num_edges() as u64).to_le_bytes())?;
    for e in &graph.edges() {
        out.write_all(&e.u.to_le_bytes())?;
        out.write_all(&e.v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_copg<R: Read>(input: R) -> Result<Graph, GraphError> {
    let mut r = BufReader::new(input);
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)
        .map_err(|_| GraphError::CorruptFile("missing magic".into()))?;
    if &magic != COPG_MAGIC {
        return Err(GraphError::CorruptFile("bad magic".into()));
    }
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)
        .map_err(|_| GraphError::CorruptFile("truncated header".into()))?;
    let n = u64::from_le_bytes(b8) as usize;
    r.read_exact(&mut b8)
        .map_err(|_| GraphError::CorruptFile("truncated header".into()))?;
    let m = u64::from_le_bytes(b8) as usize;
    let mut pairs = Vec::with_capacity(m.min(1 << 24));
    let mut b4 = [0u8; 4];
    for _ in 0..m {
        r.read_exact(&mut b4)
            .map_err(|_| GraphError::CorruptFile("truncated edge list".into()))?;
        let u = u32::from_le_bytes(b4);
        r.read_exact(&mut b4)
            .map_err(|_| GraphError::CorruptFile("truncated edge list".into()))?;
        pairs.push((u, u32::from_le_bytes(b4)));
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(GraphError::CorruptFile("trailing bytes".into()));
    }
    let edges = EdgeList::from_pairs(pairs);
    if edges.len() != m {
        return Err(GraphError::CorruptFile(
            "duplicate or self-loop edges in file".into(),
        ));
    }
    Graph::from_edges(n, &edges)
}

pub fn write_copg_file(graph: &Graph, path: &Path) -> Result<(), GraphError> {
    write_copg(graph, BufWriter::new(std::fs::File::create(path)?))
}

pub fn write_labeled_tsv<W: Write>(set: &LabeledEdgeSet, out: W) -> Result<(), GraphError> {
    let mut out = BufWriter::new(out);
    for (e, l) in set.iter() {
        writeln!(out, "{}\t{}\t{}", e.u, e.v, l)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_labeled_tsv<R: Read>(input: R) -> Result<LabeledEdgeSet, GraphError> {
    let mut set = LabeledEdgeSet::default();
    for (i, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = || GraphError::CorruptFile(format!("line {}: expected u\\tv\\tlabel", i + 1));
        let mut it = line.split('\t');
        let u: NodeId = it.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let v: NodeId = it.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let l: u8 = it.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        if l > 1 || it.next().is_some() {
            return Err(bad());
        }
        let e = Edge::new(u, v).ok_or_else(bad)?;
        set.push(e, l);
    }
    Ok(set)
}
