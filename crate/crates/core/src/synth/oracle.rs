use std::collections::{BTreeSet, HashSet, VecDeque};

use thiserror::Error;

use crate::graph::{EdgeId, Graph, NodeId};
use crate::search::Query;

/// Largest edge count the oracle accepts.
pub const ORACLE_MAX_EDGES: usize = 24;
const ORACLE_MAX_NODES: usize = 64;

/// Canonical tree identity: sorted edges and sorted nodes.
pub type TreeKey = (Vec<EdgeId>, Vec<NodeId>);

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("graph too large for brute force: {nodes} nodes, {edges} edges (limit {ORACLE_MAX_NODES} nodes, {limit} edges)")]
    TooLarge { nodes: usize, edges: usize, limit: usize },
}

struct Subtree {
    edges: u32,
    nodes: u64,
}

fn check_size(graph: &Graph, max_edges: usize) -> Result<(), OracleError> {
    let limit = max_edges.min(ORACLE_MAX_EDGES);
    if graph.edge_count() > limit || graph.node_count() > ORACLE_MAX_NODES {
        return Err(OracleError::TooLarge {
            nodes: graph.node_count(),
            edges: graph.edge_count(),
            limit,
        });
    }
    Ok(())
}

/// Every connected acyclic edge subset with at least one edge.
fn subtrees(graph: &Graph) -> Vec<Subtree> {
    let ends: Vec<(usize, usize)> = graph
        .edge_ids()
        .map(|e| {
            let r = graph.edge(e);
            (r.source.index(), r.target.index())
        })
        .collect();
    let mut seen: HashSet<u32> = HashSet::new();
    let mut queue: VecDeque<Subtree> = VecDeque::new();
    for (i, &(s, t)) in ends.iter().enumerate() {
        seen.insert(1 << i);
        queue.push_back(Subtree {
            edges: 1 << i,
            nodes: (1 << s) | (1 << t),
        });
    }
    let mut out = Vec::new();
    while let Some(t) = queue.pop_front() {
        for (i, &(a, b)) in ends.iter().enumerate() {
            if t.edges & (1 << i) != 0 {
                continue;
            }
            let (ina, inb) = (t.nodes & (1 << a) != 0, t.nodes & (1 << b) != 0);
            if ina == inb {
                continue;
            }
            let edges = t.edges | (1 << i);
            if seen.insert(edges) {
                queue.push_back(Subtree {
                    edges,
                    nodes: t.nodes | (1 << a) | (1 << b),
                });
            }
        }
        out.push(t);
    }
    out
}

fn ids(mask: u64) -> impl Iterator<Item = usize> {
    (0..64).filter(move |i| mask & (1 << i) != 0)
}

struct Masks {
    node: Vec<u64>,
    full: u64,
}

impl Masks {
    fn new(graph: &Graph, query: &Query) -> Masks {
        Masks {
            node: graph.node_ids().map(|n| query.node_mask(graph, n)).collect(),
            full: query.full_mask(),
        }
    }

    fn coverage(&self, nodes: u64) -> u64 {
        ids(nodes).fold(0, |c, n| c | self.node[n])
    }

    /// All matches of each keyword lie in one equivalence class.
    fn one_class_per_keyword(&self, graph: &Graph, nodes: u64) -> bool {
        let m = self.full.count_ones() as usize;
        (0..m).all(|k| {
            let reps: BTreeSet<NodeId> = ids(nodes)
                .filter(|n| self.node[*n] & (1 << k) != 0)
                .map(|n| graph.representative(NodeId(n as u32)))
                .collect();
            reps.len() <= 1
        })
    }
}

/// Nodes reachable from `start` over `edges` (an edge bitmask).
fn component(graph: &Graph, edges: u32, start: usize) -> u64 {
    let mut comp = 1u64 << start;
    loop {
        let mut grew = false;
        for i in ids(edges as u64) {
            let r = graph.edge(EdgeId(i as u32));
            let (a, b) = (r.source.index(), r.target.index());
            let (ina, inb) = (comp & (1 << a) != 0, comp & (1 << b) != 0);
            if ina != inb {
                comp |= (1 << a) | (1 << b);
                grew = true;
            }
        }
        if !grew {
            return comp;
        }
    }
}

fn key(edges: u32, nodes: u64) -> TreeKey {
    (
        ids(edges as u64).map(|i| EdgeId(i as u32)).collect(),
        ids(nodes).map(|i| NodeId(i as u32)).collect(),
    )
}

/// All minimal answer trees of `query`, by exhaustive enumeration.
///
/// A tree qualifies when it covers every keyword, removing any one of its
/// edges leaves no component that still covers every keyword, and all
/// nodes matching one keyword are equivalent. Refuses graphs with more than
/// `max_edges` (capped at [`ORACLE_MAX_EDGES`]) edges.
pub fn brute_force_solutions(graph: &Graph, query: &Query, max_edges: usize) -> Result<BTreeSet<TreeKey>, OracleError> {
    check_size(graph, max_edges)?;
    let masks = Masks::new(graph, query);
    let mut out = BTreeSet::new();
    for n in 0..graph.node_count() {
        if masks.node[n] == masks.full {
            out.insert(key(0, 1 << n));
        }
    }
    for t in subtrees(graph) {
        if masks.coverage(t.nodes) != masks.full || !masks.one_class_per_keyword(graph, t.nodes) {
            continue;
        }
        let minimal = ids(t.edges as u64).all(|i| {
            let rest = t.edges & !(1 << i);
            let side = component(graph, rest, graph.edge(EdgeId(i as u32)).source.index());
            masks.coverage(side) != masks.full && masks.coverage(t.nodes & !side) != masks.full
        });
        if minimal {
            out.insert(key(t.edges, t.nodes));
        }
    }
    Ok(out)
}

/// Number of rooted trees that a complete search must build without them
/// covering every keyword: trees whose keyword matches each lie in one
/// equivalence class and whose leaves other than the root each match a
/// keyword matched nowhere else in the tree. Single matching nodes count.
pub fn partial_tree_count(graph: &Graph, query: &Query, max_edges: usize) -> Result<u64, OracleError> {
    check_size(graph, max_edges)?;
    let masks = Masks::new(graph, query);
    let mut count = 0u64;
    for n in 0..graph.node_count() {
        if masks.node[n] != 0 && masks.node[n] != masks.full {
            count += 1;
        }
    }
    for t in subtrees(graph) {
        if masks.coverage(t.nodes) == masks.full || !masks.one_class_per_keyword(graph, t.nodes) {
            continue;
        }
        let mut degree = [0u8; 64];
        for i in ids(t.edges as u64) {
            let r = graph.edge(EdgeId(i as u32));
            degree[r.source.index()] += 1;
            degree[r.target.index()] += 1;
        }
        let essential = |leaf: usize| {
            let others = masks.coverage(t.nodes & !(1 << leaf));
            masks.node[leaf] & !others != 0
        };
        let leaves: Vec<usize> = ids(t.nodes).filter(|n| degree[*n] == 1).collect();
        let bad: Vec<usize> = leaves.iter().copied().filter(|l| !essential(*l)).collect();
        count += match bad.len() {
            // any node can be the root
            0 => t.nodes.count_ones() as u64,
            // only the offending leaf itself
            1 => 1,
            _ => 0,
        };
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{DataModel, EdgeType, GraphBuilder, NodeType};
    use crate::synth::{gen_chain, gen_star};

    #[test]
    fn chain3_has_eight_backbones() {
        let g = gen_chain(3);
        let q = Query::new(["kwd0", "kwd1"]).unwrap();
        let sols = brute_force_solutions(&g, &q, 24).unwrap();
        assert_eq!(sols.len(), 8);
        for (edges, nodes) in &sols {
            assert_eq!(edges.len(), 3);
            assert_eq!(nodes.len(), 4);
        }
    }

    #[test]
    fn star_2_1_uses_the_equivalence_edge() {
        let g = gen_star(2, 1);
        let q = Query::new(["kwd0", "kwd1", "kwd2"]).unwrap();
        let sols = brute_force_solutions(&g, &q, 24).unwrap();
        assert_eq!(sols.len(), 1);
        let (edges, _) = sols.iter().next().unwrap();
        assert_eq!(edges.len(), 3);
    }

    #[test]
    fn single_node_and_empty_cases() {
        let mut b = GraphBuilder::new();
        let s = b.add_source(DataModel::Synthetic, "t").unwrap();
        let a = b.add_node(s, NodeType::Uri, "kwd0 kwd1").unwrap();
        let c = b.add_node(s, NodeType::Uri, "x").unwrap();
        b.add_edge(a, c, EdgeType::Structure, "", None).unwrap();
        let g = b.freeze();
        let sols = brute_force_solutions(&g, &Query::new(["kwd0", "kwd1"]).unwrap(), 24).unwrap();
        assert_eq!(sols.into_iter().collect::<Vec<_>>(), vec![(vec![], vec![a])]);
        let none = brute_force_solutions(&g, &Query::new(["kwd0", "kwd9"]).unwrap(), 24).unwrap();
        assert!(none.is_empty());
    }

    #[test]
    fn refuses_large_graphs() {
        let g = gen_chain(13);
        let q = Query::new(["kwd0", "kwd1"]).unwrap();
        assert!(matches!(brute_force_solutions(&g, &q, 24), Err(OracleError::TooLarge { .. })));
        assert!(matches!(partial_tree_count(&gen_chain(3), &q, 4), Err(OracleError::TooLarge { .. })));
    }

    #[test]
    fn chain_partial_trees() {
        let q = Query::new(["kwd0", "kwd1"]).unwrap();
        for k in 1..=6 {
            let g = gen_chain(k);
            assert_eq!(partial_tree_count(&g, &q, 24).unwrap(), (1 << (k + 1)) - 2, "k={k}");
        }
    }
}
