//! JSON shapes shared by the CLI output and the HTTP API.
//!
//! Node and edge ids are the dense ids of the loaded snapshot. They are only
//! meaningful for the lifetime of that snapshot; a graph rebuilt from sources
//! may number them differently.

use std::collections::BTreeMap;
use std::time::Duration;

use graphlens::graph::{EdgeId, Graph, GraphCounts, NodeId};
use graphlens::search::{data_source_count, SearchStats, Solution};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct QueryRequest {
    pub keywords: Vec<String>,
    #[serde(default)]
    pub max_solutions: Option<usize>,
    #[serde(default)]
    pub timeout_ms: Option<u64>,
    #[serde(default)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NodeDto {
    pub id: u32,
    pub label: String,
    #[serde(rename = "type")]
    pub node_type: String,
    pub source_id: u32,
    pub representative: u32,
}

impl NodeDto {
    pub fn new(g: &Graph, n: NodeId) -> NodeDto {
        NodeDto {
            id: n.0,
            label: g.label(n).to_owned(),
            node_type: g.node_meta(n).node_type.name().to_owned(),
            source_id: g.node(n).source.0,
            representative: g.representative(n).0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EdgeDto {
    pub id: u32,
    pub source: u32,
    pub target: u32,
    #[serde(rename = "type")]
    pub edge_type: String,
    pub label: String,
    pub confidence: f64,
    pub specificity: f64,
}

impl EdgeDto {
    pub fn new(g: &Graph, e: EdgeId) -> EdgeDto {
        let rec = g.edge(e);
        let meta = g.edge_meta(e);
        EdgeDto {
            id: e.0,
            source: rec.source.0,
            target: rec.target.0,
            edge_type: meta.edge_type.name().to_owned(),
            label: meta.label.clone(),
            confidence: meta.confidence,
            specificity: rec.specificity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TreeStats {
    pub size: usize,
    pub specificity: f64,
    pub data_sources: usize,
    pub found_at_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AnswerTreeDto {
    /// Position in discovery order, from 0.
    pub sequence: usize,
    pub root: u32,
    pub edges: Vec<EdgeDto>,
    pub nodes: Vec<NodeDto>,
    pub stats: TreeStats,
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

impl AnswerTreeDto {
    pub fn new(g: &Graph, s: &Solution) -> AnswerTreeDto {
        AnswerTreeDto {
            sequence: s.sequence,
            root: s.root.0,
            edges: s.edges.iter().map(|e| EdgeDto::new(g, *e)).collect(),
            nodes: s.nodes.iter().map(|n| NodeDto::new(g, *n)).collect(),
            stats: TreeStats {
                size: s.size(),
                specificity: s.total_specificity(g),
                data_sources: data_source_count(g, s),
                found_at_ms: ms(s.found_at),
            },
        }
    }

    /// Rebuilds the internal tree.
    pub fn to_solution(&self) -> Solution {
        Solution {
            root: NodeId(self.root),
            edges: self.edges.iter().map(|e| EdgeId(e.id)).collect(),
            nodes: self.nodes.iter().map(|n| NodeId(n.id)).collect(),
            found_at: Duration::from_secs_f64(self.stats.found_at_ms / 1e3),
            sequence: self.sequence,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SearchStatsDto {
    pub solutions: usize,
    pub first_solution_ms: Option<f64>,
    pub last_solution_ms: Option<f64>,
    pub total_ms: f64,
    pub seeds: usize,
    pub trees_built: u64,
    pub partial_trees: u64,
    pub merges: u64,
    pub steals: u64,
    pub workers: usize,
    pub stop: String,
}

impl From<&SearchStats> for SearchStatsDto {
    fn from(s: &SearchStats) -> Self {
        SearchStatsDto {
            solutions: s.solutions,
            first_solution_ms: s.first_solution.map(ms),
            last_solution_ms: s.last_solution.map(ms),
            total_ms: ms(s.total),
            seeds: s.seeds,
            trees_built: s.trees_built,
            partial_trees: s.partial_trees,
            merges: s.merges,
            steals: s.steals,
            workers: s.workers,
            stop: s.stop.name().to_owned(),
        }
    }
}

/// One NDJSON line of a streamed query: a tree, or the closing summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum StreamLine {
    Solution(AnswerTreeDto),
    End { stats: SearchStatsDto },
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SourceDto {
    pub id: u32,
    pub model: String,
    pub origin: String,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GraphStatsDto {
    #[serde(flatten)]
    pub counts: GraphCounts,
    pub sources: Vec<SourceDto>,
    pub params: BTreeMap<String, String>,
}

impl GraphStatsDto {
    pub fn new(g: &Graph) -> GraphStatsDto {
        GraphStatsDto {
            counts: g.counts(),
            sources: g
                .sources()
                .iter()
                .map(|s| SourceDto {
                    id: s.id.0,
                    model: s.model.name().to_owned(),
                    origin: s.origin.clone(),
                })
                .collect(),
            params: g.params().clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct NeighborDto {
    pub edge: EdgeDto,
    /// `forward` when the requested node is the edge's source.
    pub direction: graphlens::graph::Direction,
    pub node: NodeDto,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct NeighborhoodDto {
    pub node: NodeDto,
    pub degree: usize,
    pub neighbors: Vec<NeighborDto>,
    pub truncated: bool,
}

impl NeighborhoodDto {
    pub fn new(g: &Graph, n: NodeId, limit: usize) -> NeighborhoodDto {
        let degree = g.degree(n);
        NeighborhoodDto {
            node: NodeDto::new(g, n),
            degree,
            neighbors: g
                .neighbors(n)
                .take(limit)
                .map(|nb| NeighborDto {
                    edge: EdgeDto::new(g, nb.edge),
                    direction: nb.direction,
                    node: NodeDto::new(g, nb.other),
                })
                .collect(),
            truncated: degree > limit,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use graphlens::search::{search, Query, SearchConfig};
    use graphlens::synth::gen_star;

    #[test]
    fn answer_tree_round_trips() {
        let g = gen_star(3, 2);
        let q = Query::new(["kwd0", "kwd1", "kwd2", "kwd3"]).unwrap();
        let out = search(&g, &q, SearchConfig::default());
        assert_eq!(out.solutions.len(), 1);
        let s = &out.solutions[0];
        let dto = AnswerTreeDto::new(&g, s);
        let json = serde_json::to_string(&StreamLine::Solution(dto.clone())).unwrap();
        let StreamLine::Solution(back) = serde_json::from_str(&json).unwrap() else {
            panic!("wrong line kind");
        };
        assert_eq!(back, dto);
        let rebuilt = back.to_solution();
        assert_eq!((rebuilt.root, &rebuilt.edges, &rebuilt.nodes), (s.root, &s.edges, &s.nodes));
        assert_eq!(rebuilt.sequence, s.sequence);
        assert!(rebuilt.found_at.abs_diff(s.found_at) < Duration::from_micros(1));
        assert!(dto.edges.iter().any(|e| e.edge_type == "equivalence"));
    }

    #[test]
    fn query_request_uses_camel_case() {
        let r: QueryRequest = serde_json::from_str(r#"{"keywords":["a"],"maxSolutions":5,"timeoutMs":10}"#).unwrap();
        assert_eq!((r.max_solutions, r.timeout_ms, r.workers), (Some(5), Some(10), None));
        assert!(serde_json::from_str::<QueryRequest>(r#"{"keywords":["a"],"max":5}"#).is_err());
    }
}
