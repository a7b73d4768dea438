//! Source mappers, entity extraction and similarity links.
//!
//! Each mapper parses its whole input before touching the graph, so a
//! parse error leaves the builder unchanged.

mod extract;
mod hier;
mod rdf;
mod rel;
mod similarity;

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{DataModel, EdgeType, Graph, GraphBuilder, GraphError, NodeId, NodeType, SourceId};
use crate::policy::{ContextModel, Policy, Resolved};
use crate::text;

pub use extract::{
    DefaultExtractor, EntityType, ExtractError, ExtractedEntity, Extractor, GAZETTEER_CONFIDENCE, PATTERN_CONFIDENCE,
};
pub use rdf::{parse_ntriples, Term, Triple};
pub use similarity::{similarity, LinkReport, SimilarityConfig};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{origin}: {message}")]
    Parse { origin: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}: unsupported file type (expected .xml, .json, .html, .htm, .nt or .csv)")]
    UnsupportedType(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("invalid similarity threshold {0}: must be in (0, 1]")]
    Threshold(f64),
}

impl IngestError {
    fn parse(origin: &str, message: impl ToString) -> IngestError {
        IngestError::Parse {
            origin: origin.to_string(),
            message: message.to_string(),
        }
    }
}

/// Running totals over an ingestion session.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestCounters {
    pub sources: u64,
    pub text_nodes: u64,
    pub extractor_calls: u64,
    pub extraction_failures: u64,
    pub skipped_nodes: u64,
    pub forced_nodes: u64,
    pub extraction_edges: u64,
    pub persons: u64,
    pub organizations: u64,
    pub locations: u64,
    pub same_as_edges: u64,
    pub equivalences: u64,
}

impl IngestCounters {
    pub fn entities(&self, t: EntityType) -> u64 {
        match t {
            EntityType::Person => self.persons,
            EntityType::Organization => self.organizations,
            EntityType::Location => self.locations,
        }
    }

    fn bump_entity(&mut self, t: EntityType) {
        match t {
            EntityType::Person => self.persons += 1,
            EntityType::Organization => self.organizations += 1,
            EntityType::Location => self.locations += 1,
        }
    }
}

/// Everything needed to resume an ingestion session.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct IngestState {
    pub builder: GraphBuilder,
    entities: Vec<(EntityType, String, NodeId)>,
    values: Vec<NodeId>,
    same_as: Vec<(NodeId, NodeId)>,
    pub counters: IngestCounters,
    pub failures: Vec<String>,
}

/// Single-writer ingestion session over a [`GraphBuilder`].
pub struct Ingestor {
    builder: GraphBuilder,
    extractor: Box<dyn Extractor>,
    policy: Policy,
    entities: HashMap<(EntityType, String), NodeId>,
    values: Vec<NodeId>,
    same_as: HashSet<(NodeId, NodeId)>,
    counters: IngestCounters,
    failures: Vec<String>,
}

impl Ingestor {
    pub fn new(extractor: impl Extractor + 'static) -> Ingestor {
        Ingestor::resume(IngestState::default(), extractor)
    }

    pub fn resume(state: IngestState, extractor: impl Extractor + 'static) -> Ingestor {
        Ingestor {
            builder: state.builder,
            extractor: Box::new(extractor),
            policy: Policy::default(),
            entities: state.entities.into_iter().map(|(t, k, n)| ((t, k), n)).collect(),
            values: state.values,
            same_as: state.same_as.into_iter().collect(),
            counters: state.counters,
            failures: state.failures,
        }
    }

    pub fn state(&self) -> IngestState {
        let mut entities: Vec<_> = self.entities.iter().map(|((t, k), n)| (*t, k.clone(), *n)).collect();
        entities.sort_by_key(|e| e.2);
        let mut same_as: Vec<_> = self.same_as.iter().copied().collect();
        same_as.sort_unstable();
        IngestState {
            builder: self.builder.clone(),
            entities,
            values: self.values.clone(),
            same_as,
            counters: self.counters.clone(),
            failures: self.failures.clone(),
        }
    }

    pub fn set_policy(&mut self, policy: Policy) {
        self.policy = policy;
    }

    pub fn policy(&self) -> &Policy {
        &self.policy
    }

    pub fn counters(&self) -> &IngestCounters {
        &self.counters
    }

    /// Messages of extractor failures; the affected nodes were kept
    /// without extraction edges.
    pub fn failures(&self) -> &[String] {
        &self.failures
    }

    pub fn builder(&self) -> &GraphBuilder {
        &self.builder
    }

    pub fn builder_mut(&mut self) -> &mut GraphBuilder {
        &mut self.builder
    }

    /// Shared entity node for (type, surface), if any.
    pub fn entity(&self, entity_type: EntityType, surface: &str) -> Option<NodeId> {
        self.entities.get(&(entity_type, text::normalized_key(surface))).copied()
    }

    /// Leaf value nodes created so far, in creation order.
    pub fn value_nodes(&self) -> &[NodeId] {
        &self.values
    }

    pub fn freeze(&mut self) -> Graph {
        self.builder.freeze()
    }

    /// Reads `path` and dispatches on its extension. CSV tables are named
    /// after the file stem.
    pub fn ingest_file(&mut self, path: &Path) -> Result<Vec<NodeId>, IngestError> {
        let shown = path.display().to_string();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .unwrap_or_default();
        if !["xml", "json", "html", "htm", "nt", "csv"].contains(&ext.as_str()) {
            return Err(IngestError::UnsupportedType(shown));
        }
        let body = std::fs::read_to_string(path).map_err(|source| IngestError::Io {
            path: shown.clone(),
            source,
        })?;
        match ext.as_str() {
            "xml" => self.ingest_xml(&shown, &body),
            "json" => self.ingest_json(&shown, &body),
            "html" | "htm" => self.ingest_html(&shown, &body),
            "nt" => self.ingest_rdf(&shown, &body),
            _ => {
                let table = path.file_stem().and_then(|s| s.to_str()).unwrap_or("table").to_string();
                self.ingest_rel(&shown, &table, &body)
            }
        }
    }

    fn open_source(&mut self, model: DataModel, origin: &str) -> Result<SourceId, IngestError> {
        let s = self.builder.add_source(model, origin)?;
        self.counters.sources += 1;
        Ok(s)
    }

    /// Adds a text leaf under `parent` and runs extraction on it.
    #[allow(clippy::too_many_arguments)]
    fn text_leaf(
        &mut self,
        source: SourceId,
        node_type: NodeType,
        parent: NodeId,
        edge_label: &str,
        value: &str,
        model: ContextModel,
        path: &str,
        under_skip_all: bool,
    ) -> NodeId {
        let leaf = self.value_node(source, node_type, value);
        self.builder
            .add_edge(parent, leaf, EdgeType::Structure, edge_label, None)
            .expect("fresh nodes");
        let action = self.policy.action_for(model, path, under_skip_all);
        self.extract(source, leaf, value, action);
        leaf
    }

    fn value_node(&mut self, source: SourceId, node_type: NodeType, value: &str) -> NodeId {
        let n = self.builder.add_node(source, node_type, value).expect("open builder");
        self.values.push(n);
        self.counters.text_nodes += 1;
        n
    }

    fn structural(&mut self, source: SourceId, node_type: NodeType, label: &str) -> NodeId {
        self.builder.add_node(source, node_type, label).expect("open builder")
    }

    /// Runs the policy outcome for one text node.
    fn extract(&mut self, source: SourceId, node: NodeId, value: &str, action: Resolved) {
        match action {
            Resolved::Skip => self.counters.skipped_nodes += 1,
            Resolved::Force(t) => {
                self.counters.forced_nodes += 1;
                let surface = value.trim();
                if !surface.is_empty() {
                    self.link_entity(source, node, t, surface, 1.0);
                }
            }
            Resolved::Default => {
                self.counters.extractor_calls += 1;
                match self.extractor.extract(value) {
                    Ok(found) => {
                        let mut linked: Vec<NodeId> = Vec::new();
                        for e in found {
                            self.link_entity_dedup(source, node, &e, &mut linked);
                        }
                    }
                    Err(err) => {
                        self.counters.extraction_failures += 1;
                        let label = self.builder.node_label(node).to_string();
                        self.failures.push(format!("node {node} ({label:?}): {err}"));
                    }
                }
            }
        }
    }

    fn entity_node(&mut self, source: SourceId, t: EntityType, surface: &str) -> Option<NodeId> {
        let key = text::normalized_key(surface);
        if key.is_empty() {
            return None;
        }
        if let Some(n) = self.entities.get(&(t, key.clone())) {
            return Some(*n);
        }
        let n = self.builder.add_node(source, t.node_type(), surface).expect("open builder");
        self.entities.insert((t, key), n);
        self.counters.bump_entity(t);
        Some(n)
    }

    fn link_entity(&mut self, source: SourceId, node: NodeId, t: EntityType, surface: &str, confidence: f64) {
        if let Some(ent) = self.entity_node(source, t, surface) {
            self.builder
                .add_edge(node, ent, EdgeType::Extraction, t.name(), Some(confidence))
                .expect("valid extraction edge");
            self.counters.extraction_edges += 1;
        }
    }

    /// One extraction edge per (text node, entity); repeated mentions keep
    /// the first edge.
    fn link_entity_dedup(&mut self, source: SourceId, node: NodeId, e: &ExtractedEntity, linked: &mut Vec<NodeId>) {
        let Some(ent) = self.entity_node(source, e.entity_type, &e.surface) else {
            return;
        };
        if linked.contains(&ent) {
            return;
        }
        let confidence = e.confidence.clamp(f64::MIN_POSITIVE, 1.0);
        self.builder
            .add_edge(node, ent, EdgeType::Extraction, e.entity_type.name(), Some(confidence))
            .expect("valid extraction edge");
        self.counters.extraction_edges += 1;
        linked.push(ent);
    }

    /// Entity nodes created so far, in id order.
    pub fn entity_nodes(&self) -> Vec<NodeId> {
        let mut v: Vec<NodeId> = self.entities.values().copied().collect();
        v.sort_unstable();
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Failing;

    impl Extractor for Failing {
        fn extract(&self, text: &str) -> Result<Vec<ExtractedEntity>, ExtractError> {
            if text.contains("boom") {
                Err(ExtractError("model crashed".into()))
            } else {
                Ok(vec![])
            }
        }
    }

    #[test]
    fn extractor_failure_keeps_the_node() {
        let mut ing = Ingestor::new(Failing);
        ing.ingest_json("f.json", r#"{"a": "boom", "b": "fine"}"#).unwrap();
        assert_eq!(ing.counters().extractor_calls, 2);
        assert_eq!(ing.counters().extraction_failures, 1);
        assert_eq!(ing.failures().len(), 1);
        let g = ing.freeze();
        assert_eq!(g.lookup("boom").len(), 1);
    }

    #[test]
    fn state_round_trips_through_json() {
        let mut x = DefaultExtractor::new();
        x.add_entry(EntityType::Person, "Alice");
        let mut ing = Ingestor::new(x.clone());
        ing.ingest_json("a.json", r#"{"name": "Alice"}"#).unwrap();
        let json = serde_json::to_string(&ing.state()).unwrap();
        let state: IngestState = serde_json::from_str(&json).unwrap();
        let mut again = Ingestor::resume(state, x);
        again.ingest_json("b.json", r#"{"who": "Alice"}"#).unwrap();
        assert_eq!(again.counters().persons, 1);
        assert_eq!(again.counters().sources, 2);
        assert_eq!(again.counters().extraction_edges, 2);
    }
}
