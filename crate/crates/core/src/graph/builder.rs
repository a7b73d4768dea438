use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::keyword::KeywordIndex;
use super::store::{EdgeRecord, Graph, NodeRecord};
use super::{
    similarity_label, DataModel, EdgeId, EdgeMetadata, EdgeType, GraphError, NodeId,
    NodeMetadata, NodeType, SourceId, SourceInfo, DEFAULT_NEIGHBOR_SLOTS,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphConfig {
    /// Number of adjacency slots stored inline in each node row.
    pub neighbor_slots: usize,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            neighbor_slots: DEFAULT_NEIGHBOR_SLOTS,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct PendingNode {
    source: SourceId,
    meta: NodeMetadata,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct PendingEdge {
    source: NodeId,
    target: NodeId,
    meta: EdgeMetadata,
}

/// Single-writer accumulator for a graph under construction.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct GraphBuilder {
    config: GraphConfig,
    sources: Vec<SourceInfo>,
    nodes: Vec<PendingNode>,
    reps: Vec<NodeId>,
    edges: Vec<PendingEdge>,
    params: BTreeMap<String, String>,
    frozen: bool,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_config(config: GraphConfig) -> Self {
        assert!(config.neighbor_slots > 0, "at least one static slot is required");
        GraphBuilder {
            config,
            ..Default::default()
        }
    }

    pub fn config(&self) -> GraphConfig {
        self.config
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Number of explicitly added edges (equivalence edges are only
    /// materialized by [`freeze`](Self::freeze)).
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    fn check_open(&self) -> Result<(), GraphError> {
        if self.frozen {
            Err(GraphError::Frozen)
        } else {
            Ok(())
        }
    }

    fn check_node(&self, n: NodeId) -> Result<(), GraphError> {
        if n.index() < self.nodes.len() {
            Ok(())
        } else {
            Err(GraphError::UnknownNode(n))
        }
    }

    pub fn add_source(&mut self, model: DataModel, origin: impl Into<String>) -> Result<SourceId, GraphError> {
        self.check_open()?;
        let id = SourceId(self.sources.len() as u32);
        self.sources.push(SourceInfo {
            id,
            model,
            origin: origin.into(),
        });
        Ok(id)
    }

    pub fn sources(&self) -> &[SourceInfo] {
        &self.sources
    }

    pub fn add_node(
        &mut self,
        source: SourceId,
        node_type: NodeType,
        label: impl Into<String>,
    ) -> Result<NodeId, GraphError> {
        self.check_open()?;
        if source.index() >= self.sources.len() {
            return Err(GraphError::UnknownSource(source));
        }
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(PendingNode {
            source,
            meta: NodeMetadata {
                node_type,
                label: label.into(),
            },
        });
        self.reps.push(id);
        Ok(id)
    }

    /// Adds an edge. `confidence` defaults to 1.0 when `None`.
    pub fn add_edge(
        &mut self,
        source: NodeId,
        target: NodeId,
        edge_type: EdgeType,
        label: impl Into<String>,
        confidence: Option<f64>,
    ) -> Result<EdgeId, GraphError> {
        self.check_open()?;
        self.check_node(source)?;
        self.check_node(target)?;
        if source == target {
            return Err(GraphError::SelfLoop(source));
        }
        if edge_type == EdgeType::Equivalence {
            return Err(GraphError::ExplicitEquivalence);
        }
        let confidence = confidence.unwrap_or(1.0);
        if !(confidence > 0.0 && confidence <= 1.0) {
            return Err(GraphError::Confidence(confidence));
        }
        let id = EdgeId(self.edges.len() as u32);
        self.edges.push(PendingEdge {
            source,
            target,
            meta: EdgeMetadata {
                edge_type,
                label: label.into(),
                confidence,
            },
        });
        Ok(id)
    }

    /// Points `member` at `rep`. The member-to-representative equivalence
    /// edge is materialized at freeze time.
    pub fn set_representative(&mut self, member: NodeId, rep: NodeId) -> Result<(), GraphError> {
        self.check_open()?;
        self.check_node(member)?;
        self.check_node(rep)?;
        if member == rep {
            return Ok(());
        }
        let mut cur = rep;
        loop {
            if cur == member {
                return Err(GraphError::RepresentativeCycle { member, rep });
            }
            let next = self.reps[cur.index()];
            if next == cur {
                break;
            }
            cur = next;
        }
        self.reps[member.index()] = rep;
        Ok(())
    }

    /// Current representative of `n`, following the assignment chain.
    pub fn representative(&self, n: NodeId) -> NodeId {
        let mut cur = n;
        while self.reps[cur.index()] != cur {
            cur = self.reps[cur.index()];
        }
        cur
    }

    /// Unions the equivalence classes of `a` and `b`; the class keeps its
    /// lowest node id as representative. Returns false if already equivalent.
    pub fn union_equivalent(&mut self, a: NodeId, b: NodeId) -> Result<bool, GraphError> {
        self.check_open()?;
        self.check_node(a)?;
        self.check_node(b)?;
        let ra = self.representative(a);
        let rb = self.representative(b);
        if ra == rb {
            return Ok(false);
        }
        let (keep, moved) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.reps[moved.index()] = keep;
        // flatten both chains onto the surviving representative
        for start in [a, b] {
            let mut cur = start;
            while cur != keep {
                let next = self.reps[cur.index()];
                self.reps[cur.index()] = keep;
                cur = next;
            }
        }
        Ok(true)
    }

    pub fn node_label(&self, n: NodeId) -> &str {
        &self.nodes[n.index()].meta.label
    }

    pub fn node_type(&self, n: NodeId) -> NodeType {
        self.nodes[n.index()].meta.node_type
    }

    pub fn node_source(&self, n: NodeId) -> SourceId {
        self.nodes[n.index()].source
    }

    pub fn set_param(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.params.insert(key.into(), value.into());
    }

    pub fn params(&self) -> &BTreeMap<String, String> {
        &self.params
    }

    /// Lays out the graph and seals this builder. Further mutations fail with
    /// [`GraphError::Frozen`].
    pub fn freeze(&mut self) -> Graph {
        self.frozen = true;
        let n = self.nodes.len();
        let k = self.config.neighbor_slots;

        let mut reps = self.reps.clone();
        for i in 0..n {
            let mut root = NodeId(i as u32);
            while reps[root.index()] != root {
                root = reps[root.index()];
            }
            let mut cur = NodeId(i as u32);
            while reps[cur.index()] != root {
                let next = reps[cur.index()];
                reps[cur.index()] = root;
                cur = next;
            }
        }

        let mut edges: Vec<EdgeRecord> = Vec::with_capacity(self.edges.len() + n / 8);
        let mut edge_meta: Vec<EdgeMetadata> = Vec::with_capacity(edges.capacity());
        for e in &self.edges {
            edges.push(EdgeRecord {
                source: e.source,
                target: e.target,
                specificity: 1.0,
                meta: edge_meta.len() as u32,
            });
            edge_meta.push(e.meta.clone());
        }
        for (i, rep) in reps.iter().enumerate() {
            if rep.index() != i {
                edges.push(EdgeRecord {
                    source: *rep,
                    target: NodeId(i as u32),
                    specificity: 1.0,
                    meta: edge_meta.len() as u32,
                });
                edge_meta.push(EdgeMetadata {
                    edge_type: EdgeType::Equivalence,
                    label: similarity_label(1.0),
                    confidence: 1.0,
                });
            }
        }

        let mut adjacency: Vec<Vec<EdgeId>> = vec![Vec::new(); n];
        for (i, e) in edges.iter().enumerate() {
            adjacency[e.source.index()].push(EdgeId(i as u32));
            adjacency[e.target.index()].push(EdgeId(i as u32));
        }

        // node-side specificity: 1 / number of incident edges sharing the label
        let mut side_min = vec![1.0f64; edges.len()];
        let mut counts: HashMap<&str, u32> = HashMap::new();
        for adj in &adjacency {
            counts.clear();
            for e in adj {
                let label = edge_meta[edges[e.index()].meta as usize].label.as_str();
                *counts.entry(label).or_insert(0) += 1;
            }
            for e in adj {
                let label = edge_meta[edges[e.index()].meta as usize].label.as_str();
                let s = 1.0 / counts[label] as f64;
                let slot = &mut side_min[e.index()];
                if s < *slot {
                    *slot = s;
                }
            }
        }
        for (e, s) in edges.iter_mut().zip(side_min) {
            e.specificity = s;
        }

        let mut nodes = Vec::with_capacity(n);
        let mut slots = vec![EdgeId::NONE; n * k];
        let mut overflow_offsets = vec![0u32];
        let mut overflow_edges = Vec::new();
        for (i, adj) in adjacency.iter().enumerate() {
            let inline = adj.len().min(k);
            slots[i * k..i * k + inline].copy_from_slice(&adj[..inline]);
            let overflow = if adj.len() > k {
                overflow_edges.extend_from_slice(&adj[k..]);
                overflow_offsets.push(overflow_edges.len() as u32);
                (overflow_offsets.len() - 2) as u32
            } else {
                u32::MAX
            };
            nodes.push(NodeRecord {
                source: self.nodes[i].source,
                representative: reps[i],
                overflow,
                meta: i as u32,
            });
        }

        let node_meta: Vec<NodeMetadata> = self.nodes.iter().map(|p| p.meta.clone()).collect();
        let keywords = KeywordIndex::build(node_meta.iter().map(|m| m.label.as_str()));

        Graph::assemble(
            k,
            self.sources.clone(),
            nodes,
            slots,
            overflow_offsets,
            overflow_edges,
            node_meta,
            edges,
            edge_meta,
            keywords,
            self.params.clone(),
        )
    }
}
