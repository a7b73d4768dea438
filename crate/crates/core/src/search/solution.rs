use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{Query, Solution};
use crate::graph::{EdgeId, Graph, NodeId};

/// Checks that `edges` (with `root` when empty) form a minimal answer tree
/// for `query`: a tree covering every keyword, where each leaf matches a
/// keyword no other node of the tree matches, and where all nodes matching
/// one keyword share an equivalence class.
pub fn is_solution(graph: &Graph, query: &Query, root: NodeId, edges: &[EdgeId]) -> bool {
    let mut degree: BTreeMap<NodeId, usize> = BTreeMap::new();
    degree.insert(root, 0);
    let mut seen = BTreeSet::new();
    for &e in edges {
        if e.index() >= graph.edge_count() || !seen.insert(e) {
            return false;
        }
        let r = graph.edge(e);
        *degree.entry(r.source).or_default() += 1;
        *degree.entry(r.target).or_default() += 1;
    }
    if !edges.is_empty() && degree[&root] == 0 {
        return false;
    }
    if degree.len() != edges.len() + 1 || !connected(graph, &degree, edges) {
        return false;
    }

    let masks: HashMap<NodeId, u64> = degree.keys().map(|&n| (n, query.node_mask(graph, n))).collect();
    let coverage = masks.values().fold(0, |a, m| a | m);
    if coverage != query.full_mask() {
        return false;
    }
    for k in 0..query.len() {
        let mut classes = masks
            .iter()
            .filter(|(_, m)| *m & (1 << k) != 0)
            .map(|(n, _)| graph.representative(*n));
        let first = classes.next();
        if classes.any(|c| Some(c) != first) {
            return false;
        }
    }
    for (&n, &d) in &degree {
        if d > 1 {
            continue;
        }
        let own = masks[&n];
        let others = masks.iter().filter(|(m, _)| **m != n).fold(0, |a, (_, m)| a | m);
        if own & !others == 0 && !edges.is_empty() {
            return false;
        }
    }
    true
}

fn connected(graph: &Graph, nodes: &BTreeMap<NodeId, usize>, edges: &[EdgeId]) -> bool {
    let index: HashMap<NodeId, usize> = nodes.keys().enumerate().map(|(i, n)| (*n, i)).collect();
    let mut parent: Vec<usize> = (0..index.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut comps = index.len();
    for &e in edges {
        let r = graph.edge(e);
        let (a, b) = (find(&mut parent, index[&r.source]), find(&mut parent, index[&r.target]));
        if a == b {
            return false;
        }
        parent[a] = b;
        comps -= 1;
    }
    comps == 1
}

/// Number of distinct data sources among the solution's nodes. Entity nodes
/// are shared by every source mentioning them and are not counted.
pub fn data_source_count(graph: &Graph, solution: &Solution) -> usize {
    solution
        .nodes
        .iter()
        .filter(|n| !graph.node_meta(**n).node_type.is_entity())
        .map(|n| graph.node(*n).source)
        .collect::<BTreeSet<_>>()
        .len()
}

/// Default ranking: fewer edges first, then higher total specificity.
pub fn default_order(graph: &Graph, a: &Solution, b: &Solution) -> Ordering {
    a.size()
        .cmp(&b.size())
        .then_with(|| b.total_specificity(graph).total_cmp(&a.total_specificity(graph)))
}

/// Stable sort by a comparator; equal solutions keep discovery order.
pub fn rank_solutions<F>(mut solutions: Vec<Solution>, cmp: F) -> Vec<Solution>
where
    F: FnMut(&Solution, &Solution) -> Ordering,
{
    solutions.sort_by(cmp);
    solutions
}

/// Stable sort by descending score.
pub fn rank_solutions_by_key<F>(solutions: Vec<Solution>, mut score: F) -> Vec<Solution>
where
    F: FnMut(&Solution) -> f64,
{
    let mut keyed: Vec<(f64, Solution)> = solutions.into_iter().map(|s| (score(&s), s)).collect();
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0));
    keyed.into_iter().map(|(_, s)| s).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{DataModel, EdgeType, GraphBuilder, NodeType};
    use std::time::Duration;

    fn sol(edges: &[u32], seq: usize) -> Solution {
        Solution {
            root: NodeId(0),
            edges: edges.iter().map(|e| EdgeId(*e)).collect(),
            nodes: vec![],
            found_at: Duration::ZERO,
            sequence: seq,
        }
    }

    #[test]
    fn dangling_leaf_is_not_minimal() {
        let mut b = GraphBuilder::new();
        let s = b.add_source(DataModel::Synthetic, "t").unwrap();
        let a = b.add_node(s, NodeType::JsonValue, "k0").unwrap();
        let m = b.add_node(s, NodeType::JsonValue, "k1").unwrap();
        let x = b.add_node(s, NodeType::JsonValue, "other").unwrap();
        let e0 = b.add_edge(a, m, EdgeType::Structure, "", None).unwrap();
        let e1 = b.add_edge(m, x, EdgeType::Structure, "", None).unwrap();
        let g = b.freeze();
        let q = Query::new(["k0", "k1"]).unwrap();
        assert!(is_solution(&g, &q, a, &[e0]));
        assert!(!is_solution(&g, &q, a, &[e0, e1]));
        assert!(!is_solution(&g, &q, a, &[]));
        assert!(!is_solution(&g, &q, a, &[e0, e0]));
    }

    #[test]
    fn ranking_is_stable() {
        let sols = vec![sol(&[1, 2, 3, 4, 5], 0), sol(&[1, 2], 1), sol(&[3], 2)];
        let by_size = rank_solutions(sols.clone(), |a, b| a.size().cmp(&b.size()));
        assert_eq!(by_size.iter().map(|s| s.sequence).collect::<Vec<_>>(), vec![2, 1, 0]);
        let constant = rank_solutions_by_key(sols.clone(), |_| 1.0);
        assert_eq!(constant, sols);
    }
}
