//! Parallel enumeration of minimal answer trees.
//!
//! Every matching node seeds a one-node tree. Workers pop `(tree, edge)`
//! pairs from per-worker priority queues, grow the tree over the edge and
//! merge the result with every compatible tree already rooted at the same
//! node. Queues that run dry steal from the longest queue.
//!
//! ```
//! use graphlens::search::{search, Query, SearchConfig};
//! use graphlens::synth::gen_chain;
//!
//! let g = gen_chain(4);
//! let q = Query::new(["kwd0", "kwd1"]).unwrap();
//! let out = search(&g, &q, SearchConfig::default());
//! assert_eq!(out.solutions.len(), 16);
//! ```

mod engine;
mod solution;
mod tree;

use std::time::Duration;

use serde::Serialize;
use thiserror::Error;

use crate::graph::{EdgeId, Graph, NodeId};
use crate::text;

pub use engine::Search;
pub use solution::{data_source_count, default_order, is_solution, rank_solutions, rank_solutions_by_key};
pub use tree::PartialTree;

/// Most keywords a query may hold (coverage is a 64-bit mask).
pub const MAX_KEYWORDS: usize = 64;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QueryError {
    #[error("query has no keywords")]
    Empty,
    #[error("query has more than {MAX_KEYWORDS} keywords")]
    TooMany,
    #[error("invalid keyword {0:?}: must be a single token")]
    InvalidKeyword(String),
}

/// A set of normalized single-token keywords, in first-seen order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    keywords: Vec<String>,
}

impl Query {
    pub fn new<I, S>(raw: I) -> Result<Query, QueryError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut keywords: Vec<String> = Vec::new();
        for r in raw {
            let r = r.as_ref();
            let kw = text::keyword(r).ok_or_else(|| QueryError::InvalidKeyword(r.to_string()))?;
            if !keywords.contains(&kw) {
                keywords.push(kw);
            }
        }
        if keywords.is_empty() {
            return Err(QueryError::Empty);
        }
        if keywords.len() > MAX_KEYWORDS {
            return Err(QueryError::TooMany);
        }
        Ok(Query { keywords })
    }

    pub fn keywords(&self) -> &[String] {
        &self.keywords
    }

    pub fn len(&self) -> usize {
        self.keywords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keywords.is_empty()
    }

    /// Mask of the keywords matched by `n`, computed from its label.
    pub fn node_mask(&self, graph: &Graph, n: NodeId) -> u64 {
        let toks = text::tokens(graph.label(n));
        self.keywords
            .iter()
            .enumerate()
            .filter(|(_, k)| toks.contains(k))
            .fold(0, |m, (i, _)| m | 1 << i)
    }

    pub fn full_mask(&self) -> u64 {
        if self.keywords.len() == 64 {
            u64::MAX
        } else {
            (1 << self.keywords.len()) - 1
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchConfig {
    pub workers: usize,
    /// Stop after this many solutions; `None` runs to exhaustion.
    pub max_solutions: Option<usize>,
    pub timeout: Option<Duration>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            workers: 1,
            max_solutions: None,
            timeout: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Exhausted,
    MaxSolutions,
    Timeout,
    Cancelled,
}

impl StopReason {
    pub fn name(self) -> &'static str {
        match self {
            StopReason::Exhausted => "exhausted",
            StopReason::MaxSolutions => "max_solutions",
            StopReason::Timeout => "timeout",
            StopReason::Cancelled => "cancelled",
        }
    }
}

/// A minimal answer tree as reported to callers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub root: NodeId,
    /// Sorted edge ids.
    pub edges: Vec<EdgeId>,
    /// Sorted node ids.
    pub nodes: Vec<NodeId>,
    /// Time since the search started.
    pub found_at: Duration,
    /// Position in discovery order.
    pub sequence: usize,
}

impl Solution {
    pub fn size(&self) -> usize {
        self.edges.len()
    }

    pub fn total_specificity(&self, graph: &Graph) -> f64 {
        self.edges.iter().map(|e| graph.specificity(*e)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchStats {
    pub first_solution: Option<Duration>,
    pub last_solution: Option<Duration>,
    pub total: Duration,
    pub solutions: usize,
    pub seeds: usize,
    /// Distinct trees created, seeds included.
    pub trees_built: u64,
    /// Distinct trees that do not cover every keyword, seeds included.
    pub partial_trees: u64,
    pub grow_attempts: u64,
    pub merges: u64,
    pub steals: u64,
    pub workers: usize,
    pub stop: StopReason,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub solutions: Vec<Solution>,
    pub stats: SearchStats,
}

impl SearchOutcome {
    /// Solutions as sorted edge-id lists, sorted; handy for set comparison.
    pub fn edge_sets(&self) -> Vec<Vec<EdgeId>> {
        let mut v: Vec<Vec<EdgeId>> = self.solutions.iter().map(|s| s.edges.clone()).collect();
        v.sort();
        v
    }
}

/// Seeds and runs a search in one call.
pub fn search(graph: &Graph, query: &Query, config: SearchConfig) -> SearchOutcome {
    Search::new(graph, query, config).run()
}
