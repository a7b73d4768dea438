//! CSV tables with a header row.

use super::{IngestError, Ingestor};
use crate::graph::{DataModel, NodeId, NodeType};
use crate::policy::ContextModel;

impl Ingestor {
    /// Each row becomes a node labeled `table#index` (0-based) with one
    /// edge per non-empty cell, labeled by its column, to a value leaf.
    pub fn ingest_rel(&mut self, origin: &str, table: &str, text: &str) -> Result<Vec<NodeId>, IngestError> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let header: Vec<String> = reader
            .headers()
            .map_err(|e| IngestError::parse(origin, e))?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        if header.iter().any(String::is_empty) {
            return Err(IngestError::parse(origin, "empty column name in header"));
        }
        let rows: Vec<csv::StringRecord> = reader
            .records()
            .collect::<Result<_, _>>()
            .map_err(|e| IngestError::parse(origin, e))?;

        let source = self.open_source(DataModel::Rel, origin)?;
        let rel = ContextModel::Relational;
        let contexts: Vec<String> = header.iter().map(|c| format!("{table}.{c}")).collect();
        let mut out = Vec::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            let node = self.structural(source, NodeType::RelRow, &format!("{table}#{i}"));
            let covered = self.policy.has_skip_all()
                && row
                    .iter()
                    .zip(&contexts)
                    .any(|(cell, ctx)| !cell.is_empty() && self.policy.is_skip_all_target(rel, ctx));
            for ((cell, column), ctx) in row.iter().zip(&header).zip(&contexts) {
                if cell.is_empty() {
                    continue;
                }
                self.text_leaf(source, NodeType::RelValue, node, column, cell, rel, ctx, covered);
            }
            out.push(node);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::DefaultExtractor;
    use crate::policy::Policy;

    #[test]
    fn rows_and_cells() {
        let mut ing = Ingestor::new(DefaultExtractor::new().without_patterns());
        let rows = ing.ingest_rel("t.csv", "grants", "who,amount\nAlice,100\nBob,\n").unwrap();
        assert_eq!(rows.len(), 2);
        let g = ing.freeze();
        assert_eq!(g.label(rows[0]), "grants#0");
        assert_eq!(g.label(rows[1]), "grants#1");
        assert_eq!(g.degree(rows[0]), 2);
        assert_eq!(g.degree(rows[1]), 1);
        let labels: Vec<&str> = g.edge_ids().map(|e| g.edge_meta(e).label.as_str()).collect();
        assert_eq!(labels, vec!["who", "amount", "who"]);
    }

    #[test]
    fn ragged_rows_are_rejected_before_mutation() {
        let mut ing = Ingestor::new(DefaultExtractor::new());
        let err = ing.ingest_rel("t.csv", "t", "a,b\n1,2\n3\n").unwrap_err();
        assert!(err.to_string().starts_with("t.csv:"));
        assert_eq!(ing.builder().node_count(), 0);
    }

    #[test]
    fn relational_policies() {
        let mut ing = Ingestor::new(DefaultExtractor::new());
        ing.set_policy(Policy::parse("t.a skip\nt.b force Person").unwrap());
        ing.ingest_rel("t.csv", "t", "a,b,c\nx,Alice,z\n").unwrap();
        let c = ing.counters();
        assert_eq!((c.skipped_nodes, c.forced_nodes, c.extractor_calls, c.persons), (1, 1, 1, 1));
    }
}
