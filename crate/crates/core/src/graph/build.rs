use super::{EdgeList, Graph, GraphError, NodeId, NodeIndex};
use crate::ingest::MergedTable;

/// Builds the undirected co-purchase graph from the merged table.
///
/// Node ids follow the row order of `merged`. Each (item, similar item)
/// pair becomes one undirected edge; reciprocal listings collapse.
pub fn build_positive_edges(merged: &MergedTable) -> Result<(Graph, EdgeList), GraphError> {
    let index = NodeIndex::new(merged.rows.iter().map(|r| r.asin.clone()).collect());
    let mut pairs = Vec::new();
    for (i, row) in merged.rows.iter().enumerate() {
        for other in &row.similar {
            let j = index
                .id(other)
                .ok_or_else(|| GraphError::DanglingReference {
                    from: row.asin.clone(),
                    missing: other.clone(),
                })?;
            pairs.push((i as NodeId, j));
        }
    }
    let edges = EdgeList::from_pairs(pairs);
    let graph = Graph::from_edges(index.len(), &edges)?.with_index(index);
    Ok((graph, edges))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::MergedRow;

    fn row(asin: &str, similar: &[&str]) -> MergedRow {
        MergedRow {
            asin: asin.into(),
            similar: similar.iter().map(|s| s.to_string()).collect(),
            ..MergedRow::default()
        }
    }

    #[test]
    fn mutual_listing_deduplicates() {
        let m = MergedTable {
            rows: vec![row("A", &["B"]), row("B", &["A"]), row("C", &[])],
        };
        let (g, e) = build_positive_edges(&m).unwrap();
        assert_eq!(g.num_nodes(), 3);
        assert_eq!(e.len(), 1);
        assert!(g.has_edge(0, 1));
    }

    #[test]
    fn six_items_seven_directed_entries_one_reciprocal() {
        // A->B, B->A (reciprocal), A->C, C->D, D->E, E->F, F->A
        let m = MergedTable {
            rows: vec![
                row("A", &["B", "C"]),
                row("B", &["A"]),
                row("C", &["D"]),
                row("D", &["E"]),
                row("E", &["F"]),
                row("F", &["A"]),
            ],
        };
        let (g, e) = build_positive_edges(&m).unwrap();
        assert_eq!(e.len(), 6);
        assert_eq!(g.num_edges(), 6);
        assert_eq!(g.index().unwrap().id("D"), Some(3));
    }

    #[test]
    fn dangling_reference_is_an_error() {
        let m = MergedTable {
            rows: vec![row("A", &["Z"])],
        };
        assert!(matches!(
            build_positive_edges(&m),
            Err(GraphError::DanglingReference { .. })
        ));
    }
}
