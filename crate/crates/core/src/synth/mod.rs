//! Synthetic benchmark graphs and corpora, a brute-force answer-tree oracle
//! and a benchmark harness.

mod bench;
mod oracle;
mod pubmed;

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::graph::{DataModel, EdgeType, Graph, GraphBuilder, NodeType};
use crate::search::Query;

pub use bench::{run_bench, BenchCase, BenchReport, BenchRow, BENCH_SCHEMA};
pub use pubmed::{pubmed_corpus, pubmed_policy, SyntheticDoc, PUBMED_ARTICLE_ID, PUBMED_AUTHOR_NAME, PUBMED_PMID};
pub use oracle::{brute_force_solutions, partial_tree_count, OracleError, TreeKey, ORACLE_MAX_EDGES};

/// `k + 1` backbone nodes joined by parallel edges `a{i}` and `b{i}`.
/// The first node is labeled `kwd0`, the last `kwd1`.
pub fn gen_chain(k: usize) -> Graph {
    assert!(k >= 1, "chain needs k >= 1");
    let mut b = GraphBuilder::new();
    let s = b.add_source(DataModel::Synthetic, format!("chain:{k}")).unwrap();
    let mut prev = b.add_node(s, NodeType::Uri, "kwd0").unwrap();
    for i in 1..=k {
        let label = if i == k { "kwd1".to_string() } else { format!("c{i}") };
        let n = b.add_node(s, NodeType::Uri, label).unwrap();
        b.add_edge(prev, n, EdgeType::Structure, format!("a{i}"), None).unwrap();
        b.add_edge(prev, n, EdgeType::Structure, format!("b{i}"), None).unwrap();
        prev = n;
    }
    b.set_param("generator", format!("chain:{k}"));
    b.freeze()
}

/// `p` branches of `k` edges. Branch `i` (1-based) starts at a node labeled
/// `kwd{i}` and ends at an extremity labeled `kwd0`; the extremities form one
/// equivalence class represented by the first of them.
pub fn gen_star(p: usize, k: usize) -> Graph {
    assert!(p >= 2 && k >= 1, "star needs p >= 2 and k >= 1");
    let mut b = GraphBuilder::new();
    let s = b.add_source(DataModel::Synthetic, format!("star:{p},{k}")).unwrap();
    let mut extremities = Vec::with_capacity(p);
    for i in 1..=p {
        let mut prev = b.add_node(s, NodeType::Uri, format!("kwd{i}")).unwrap();
        for j in 1..=k {
            let label = if j == k { "kwd0".to_string() } else { format!("s{i}_{j}") };
            let n = b.add_node(s, NodeType::Uri, label).unwrap();
            b.add_edge(prev, n, EdgeType::Structure, format!("l{j}"), None).unwrap();
            prev = n;
        }
        extremities.push(prev);
    }
    for x in &extremities[1..] {
        b.union_equivalent(extremities[0], *x).unwrap();
    }
    b.set_param("generator", format!("star:{p},{k}"));
    b.freeze()
}

/// Query over `kwd0..=kwdp` for a star, or `kwd0, kwd1` for a chain.
pub fn default_query(spec: &GraphSpec) -> Query {
    match spec {
        GraphSpec::Chain { .. } => Query::new(["kwd0", "kwd1"]).unwrap(),
        GraphSpec::Star { p, .. } => Query::new((0..=*p).map(|i| format!("kwd{i}"))).unwrap(),
    }
}

/// Named synthetic graph, parsed from `chain:K` or `star:P,K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphSpec {
    Chain { k: usize },
    Star { p: usize, k: usize },
}

impl GraphSpec {
    pub fn build(&self) -> Graph {
        match *self {
            GraphSpec::Chain { k } => gen_chain(k),
            GraphSpec::Star { p, k } => gen_star(p, k),
        }
    }
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphSpec::Chain { k } => write!(f, "chain:{k}"),
            GraphSpec::Star { p, k } => write!(f, "star:{p},{k}"),
        }
    }
}

impl FromStr for GraphSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("bad graph spec {s:?}; expected chain:K or star:P,K");
        let (kind, args) = s.split_once(':').ok_or_else(bad)?;
        let nums: Vec<usize> = args
            .split(',')
            .map(|a| a.trim().parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad())?;
        match (kind.trim(), nums.as_slice()) {
            ("chain", [k]) if *k >= 1 => Ok(GraphSpec::Chain { k: *k }),
            ("star", [p, k]) if *p >= 2 && *k >= 1 => Ok(GraphSpec::Star { p: *p, k: *k }),
            _ => Err(bad()),
        }
    }
}

/// Shape bounds for [`random_graph`].
#[derive(Debug, Clone, Copy)]
pub struct RandomGraphSpec {
    pub max_nodes: usize,
    /// Bound on all stored edges, equivalence edges included.
    pub max_edges: usize,
    pub keywords: usize,
}

/// Small random graph with planted keywords `kwd0..`, structure and sameAs
/// edges, and a few equivalence classes.
pub fn random_graph<R: Rng>(rng: &mut R, spec: RandomGraphSpec) -> Graph {
    let n = rng.gen_range(2..=spec.max_nodes.max(2));
    let mut b = GraphBuilder::new();
    let s1 = b.add_source(DataModel::Synthetic, "r1").unwrap();
    let s2 = b.add_source(DataModel::Synthetic, "r2").unwrap();
    let mut labels: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();
    for k in 0..spec.keywords {
        let hits = rng.gen_range(1..=3.min(n));
        for _ in 0..hits {
            let i = rng.gen_range(0..n);
            labels[i] = if labels[i].starts_with("kwd") && rng.gen_bool(0.5) {
                format!("{} kwd{k}", labels[i])
            } else {
                format!("kwd{k}")
            };
        }
    }
    let nodes: Vec<_> = labels
        .iter()
        .map(|l| {
            let src = if rng.gen_bool(0.5) { s1 } else { s2 };
            b.add_node(src, NodeType::Uri, l.clone()).unwrap()
        })
        .collect();

    let mut budget = spec.max_edges;
    // equivalence classes first, since each union stores one edge
    let unions = rng.gen_range(0..=2.min(n - 1));
    for _ in 0..unions {
        let same: Vec<_> = nodes.iter().copied().filter(|x| labels[x.index()].starts_with("kwd")).collect();
        let pick = if same.len() >= 2 && rng.gen_bool(0.7) { same } else { nodes.clone() };
        let two: Vec<_> = pick.choose_multiple(rng, 2).copied().collect();
        if two.len() == 2 && budget > 0 && b.union_equivalent(two[0], two[1]).unwrap() {
            budget -= 1;
        }
    }
    // a random spanning-ish backbone keeps most instances connected
    let mut order = nodes.clone();
    order.shuffle(rng);
    for w in 1..order.len() {
        if budget == 0 || rng.gen_bool(0.15) {
            continue;
        }
        let a = order[rng.gen_range(0..w)];
        b.add_edge(a, order[w], EdgeType::Structure, ["a", "b", "c"][rng.gen_range(0..3)], None).unwrap();
        budget -= 1;
    }
    let extra = rng.gen_range(0..=budget);
    for _ in 0..extra {
        let two: Vec<_> = nodes.choose_multiple(rng, 2).copied().collect();
        if rng.gen_bool(0.3) {
            let c: f64 = rng.gen_range(0.8..0.99);
            b.add_edge(two[0], two[1], EdgeType::SameAs, crate::graph::similarity_label(c), Some(c)).unwrap();
        } else {
            b.add_edge(two[0], two[1], EdgeType::Structure, ["a", "b", "c"][rng.gen_range(0..3)], None)
                .unwrap();
        }
    }
    b.freeze()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::EdgeType;

    #[test]
    fn chain_shape() {
        let g = gen_chain(1);
        assert_eq!((g.node_count(), g.edge_count()), (2, 2));
        let g = gen_chain(2);
        assert_eq!(g.edge_count(), 4);
        assert_eq!(g.degree(crate::graph::NodeId(1)), 4);
        assert_eq!(g.lookup("kwd0").len(), 1);
        assert_eq!(g.lookup("kwd1").len(), 1);
    }

    #[test]
    fn star_shape() {
        let g = gen_star(4, 2);
        assert_eq!(g.edge_count(), 11);
        let eq = g
            .edge_ids()
            .filter(|e| g.edge_meta(*e).edge_type == EdgeType::Equivalence)
            .count();
        assert_eq!(eq, 3);
        let x = g.lookup("kwd0");
        assert_eq!(x.len(), 4);
        assert!(x.iter().all(|n| g.representative(*n) == x[0]));
    }

    #[test]
    fn spec_parsing() {
        assert_eq!("chain:12".parse::<GraphSpec>().unwrap(), GraphSpec::Chain { k: 12 });
        assert_eq!("star:4,100".parse::<GraphSpec>().unwrap(), GraphSpec::Star { p: 4, k: 100 });
        assert!("star:1,3".parse::<GraphSpec>().is_err());
        assert!("chain:0".parse::<GraphSpec>().is_err());
        assert!("ring:3".parse::<GraphSpec>().is_err());
        assert_eq!(GraphSpec::Star { p: 4, k: 2 }.to_string(), "star:4,2");
    }

    #[test]
    fn random_graphs_respect_bounds() {
        use rand::SeedableRng;
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let spec = RandomGraphSpec {
            max_nodes: 12,
            max_edges: 20,
            keywords: 3,
        };
        for _ in 0..200 {
            let g = random_graph(&mut rng, spec);
            assert!(g.node_count() <= 12);
            assert!(g.edge_count() <= 20);
        }
    }
}
