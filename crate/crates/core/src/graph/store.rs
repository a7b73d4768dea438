use std::collections::BTreeMap;

use serde::Serialize;

use super::keyword::KeywordIndex;
use super::{
    EdgeId, EdgeMetadata, GraphError, NodeId, NodeMetadata, NodeType, SourceId, SourceInfo,
};
use crate::text;

/// Fixed-size node row. Static adjacency slots live in a parallel table with
/// stride `K`; see [`Graph::static_slots`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NodeRecord {
    pub source: SourceId,
    pub representative: NodeId,
    /// Index into the overflow heap, `u32::MAX` when every incident edge fits
    /// in the static slots.
    pub overflow: u32,
    pub meta: u32,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeRecord {
    pub source: NodeId,
    pub target: NodeId,
    pub specificity: f64,
    pub meta: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// The node is the edge's source.
    Forward,
    /// The node is the edge's target.
    Backward,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Neighbor {
    pub edge: EdgeId,
    pub other: NodeId,
    pub direction: Direction,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct GraphCounts {
    pub nodes: usize,
    pub edges: usize,
    pub persons: usize,
    pub organizations: usize,
    pub locations: usize,
    pub sources: usize,
}

/// Immutable graph. Safe for unsynchronized concurrent reads.
#[derive(Debug)]
pub struct Graph {
    pub(crate) k: usize,
    pub(crate) sources: Vec<SourceInfo>,
    pub(crate) nodes: Vec<NodeRecord>,
    pub(crate) slots: Vec<EdgeId>,
    pub(crate) overflow_offsets: Vec<u32>,
    pub(crate) overflow_edges: Vec<EdgeId>,
    pub(crate) node_meta: Vec<NodeMetadata>,
    pub(crate) edges: Vec<EdgeRecord>,
    pub(crate) edge_meta: Vec<EdgeMetadata>,
    pub(crate) keywords: KeywordIndex,
    pub(crate) params: BTreeMap<String, String>,
    class_size: Vec<u32>,
}

impl Graph {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn assemble(
        k: usize,
        sources: Vec<SourceInfo>,
        nodes: Vec<NodeRecord>,
        slots: Vec<EdgeId>,
        overflow_offsets: Vec<u32>,
        overflow_edges: Vec<EdgeId>,
        node_meta: Vec<NodeMetadata>,
        edges: Vec<EdgeRecord>,
        edge_meta: Vec<EdgeMetadata>,
        keywords: KeywordIndex,
        params: BTreeMap<String, String>,
    ) -> Graph {
        let mut class_size = vec![0u32; nodes.len()];
        for n in &nodes {
            // out-of-range representatives are left for validate() to reject
            if let Some(c) = class_size.get_mut(n.representative.index()) {
                *c += 1;
            }
        }
        Graph {
            k,
            sources,
            nodes,
            slots,
            overflow_offsets,
            overflow_edges,
            node_meta,
            edges,
            edge_meta,
            keywords,
            params,
            class_size,
        }
    }

    /// Checks cross-table references; used after loading untrusted bytes.
    pub(crate) fn validate(&self) -> Result<(), GraphError> {
        let bad = |m: &str| Err(GraphError::Corrupt(m.to_owned()));
        let n = self.nodes.len();
        if self.k == 0 || self.slots.len() != n * self.k {
            return bad("static slot table size");
        }
        if self.overflow_offsets.first() != Some(&0)
            || self.overflow_offsets.windows(2).any(|w| w[0] > w[1])
            || *self.overflow_offsets.last().unwrap() as usize != self.overflow_edges.len()
        {
            return bad("overflow offsets");
        }
        for rec in &self.nodes {
            if rec.representative.index() >= n
                || self.nodes[rec.representative.index()].representative != rec.representative
                || rec.meta as usize >= self.node_meta.len()
                || rec.source.index() >= self.sources.len()
                || (rec.overflow != u32::MAX && rec.overflow as usize + 1 >= self.overflow_offsets.len())
            {
                return bad("node row");
            }
        }
        for e in &self.edges {
            if e.source.index() >= n
                || e.target.index() >= n
                || e.meta as usize >= self.edge_meta.len()
                || !(e.specificity > 0.0 && e.specificity <= 1.0)
            {
                return bad("edge row");
            }
        }
        let m = self.edges.len();
        if self
            .slots
            .iter()
            .chain(&self.overflow_edges)
            .any(|e| !e.is_none() && e.index() >= m)
        {
            return bad("adjacency reference");
        }
        let mut seen = vec![0u8; m];
        for v in 0..n {
            let node = NodeId(v as u32);
            let row = self.static_slots(node);
            let filled = row.iter().take_while(|e| !e.is_none()).count();
            if row[filled..].iter().any(|e| !e.is_none()) || (filled < self.k && self.nodes[v].overflow != u32::MAX) {
                return bad("static slot layout");
            }
            for e in row[..filled].iter().chain(self.overflow(node)) {
                let rec = &self.edges[e.index()];
                if rec.source != node && rec.target != node {
                    return bad("adjacency endpoint");
                }
                seen[e.index()] = seen[e.index()].saturating_add(1);
            }
        }
        if seen.iter().any(|c| *c != 2) {
            return bad("adjacency completeness");
        }
        if self.keywords.sorted_entries().iter().any(|(_, ids)| ids.iter().any(|i| i.index() >= n)) {
            return bad("keyword index reference");
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbor_slots(&self) -> usize {
        self.k
    }

    pub fn sources(&self) -> &[SourceInfo] {
        &self.sources
    }

    pub fn params(&self) -> &BTreeMap<String, String> {
        &self.params
    }

    pub fn contains_node(&self, n: NodeId) -> bool {
        n.index() < self.nodes.len()
    }

    pub fn node(&self, n: NodeId) -> &NodeRecord {
        &self.nodes[n.index()]
    }

    pub fn node_meta(&self, n: NodeId) -> &NodeMetadata {
        &self.node_meta[self.nodes[n.index()].meta as usize]
    }

    pub fn label(&self, n: NodeId) -> &str {
        &self.node_meta(n).label
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len() as u32).map(NodeId)
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = EdgeId> {
        (0..self.edges.len() as u32).map(EdgeId)
    }

    pub fn edge(&self, e: EdgeId) -> &EdgeRecord {
        &self.edges[e.index()]
    }

    pub fn edge_meta(&self, e: EdgeId) -> &EdgeMetadata {
        &self.edge_meta[self.edges[e.index()].meta as usize]
    }

    pub fn specificity(&self, e: EdgeId) -> f64 {
        self.edges[e.index()].specificity
    }

    /// Endpoint of `e` opposite to `n`.
    pub fn other_end(&self, e: EdgeId, n: NodeId) -> NodeId {
        let rec = &self.edges[e.index()];
        if rec.source == n {
            rec.target
        } else {
            rec.source
        }
    }

    pub fn representative(&self, n: NodeId) -> NodeId {
        self.nodes[n.index()].representative
    }

    /// Number of nodes sharing `n`'s representative, `n` included.
    pub fn class_size(&self, n: NodeId) -> u32 {
        self.class_size[self.representative(n).index()]
    }

    /// The `K` static adjacency slots of `n`, including empty ones.
    pub fn static_slots(&self, n: NodeId) -> &[EdgeId] {
        let i = n.index() * self.k;
        &self.slots[i..i + self.k]
    }

    /// Edges of `n` stored in the overflow heap.
    pub fn overflow(&self, n: NodeId) -> &[EdgeId] {
        let r = self.nodes[n.index()].overflow;
        if r == u32::MAX {
            return &[];
        }
        let lo = self.overflow_offsets[r as usize] as usize;
        let hi = self.overflow_offsets[r as usize + 1] as usize;
        &self.overflow_edges[lo..hi]
    }

    /// Incident edges: static slots first, then the overflow heap.
    ///
    /// Panics if `n` is not a node of this graph; see [`Graph::try_neighbors`].
    pub fn neighbors(&self, n: NodeId) -> impl Iterator<Item = Neighbor> + '_ {
        self.static_slots(n)
            .iter()
            .take_while(|e| !e.is_none())
            .chain(self.overflow(n))
            .map(move |&edge| {
                let rec = &self.edges[edge.index()];
                if rec.source == n {
                    Neighbor {
                        edge,
                        other: rec.target,
                        direction: Direction::Forward,
                    }
                } else {
                    Neighbor {
                        edge,
                        other: rec.source,
                        direction: Direction::Backward,
                    }
                }
            })
    }

    pub fn try_neighbors(&self, n: NodeId) -> Result<impl Iterator<Item = Neighbor> + '_, GraphError> {
        if self.contains_node(n) {
            Ok(self.neighbors(n))
        } else {
            Err(GraphError::UnknownNode(n))
        }
    }

    pub fn degree(&self, n: NodeId) -> usize {
        self.static_slots(n).iter().take_while(|e| !e.is_none()).count() + self.overflow(n).len()
    }

    /// Nodes whose label contains the given keyword after normalization.
    /// Multi-token input matches nothing.
    pub fn lookup(&self, keyword: &str) -> &[NodeId] {
        match text::keyword(keyword) {
            Some(tok) => self.keywords.get(&tok),
            None => &[],
        }
    }

    pub fn keyword_index(&self) -> &KeywordIndex {
        &self.keywords
    }

    pub fn counts(&self) -> GraphCounts {
        let mut c = GraphCounts {
            nodes: self.nodes.len(),
            edges: self.edges.len(),
            sources: self.sources.len(),
            ..Default::default()
        };
        for m in &self.node_meta {
            match m.node_type {
                NodeType::EntityPerson => c.persons += 1,
                NodeType::EntityOrganization => c.organizations += 1,
                NodeType::EntityLocation => c.locations += 1,
                _ => {}
            }
        }
        c
    }
}
