//! Partial answer trees and the Grow / Merge steps.
//!
//! Trees are persistent: a grown tree points at the tree it was grown from,
//! a merged tree at its two inputs, and node sets share structure. Edge sets
//! are recovered by walking the shape.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use rpds::RedBlackTreeSetSync;

use crate::graph::{EdgeId, Graph, NodeId};

/// Query-specific view of the graph: keyword masks per matching node.
pub(crate) struct MatchContext<'g> {
    pub graph: &'g Graph,
    masks: HashMap<NodeId, u64>,
    pub keyword_count: usize,
    pub full: u64,
}

impl<'g> MatchContext<'g> {
    pub fn new(graph: &'g Graph, keywords: &[String]) -> Self {
        let mut masks: HashMap<NodeId, u64> = HashMap::new();
        for (i, kw) in keywords.iter().enumerate() {
            for n in graph.keyword_index().get(kw) {
                *masks.entry(*n).or_insert(0) |= 1 << i;
            }
        }
        let m = keywords.len();
        MatchContext {
            graph,
            masks,
            keyword_count: m,
            full: if m == 64 { u64::MAX } else { (1u64 << m) - 1 },
        }
    }

    pub fn mask(&self, n: NodeId) -> u64 {
        self.masks.get(&n).copied().unwrap_or(0)
    }

    /// Matching nodes in ascending id order.
    pub fn matching_nodes(&self) -> Vec<NodeId> {
        let mut v: Vec<NodeId> = self.masks.keys().copied().collect();
        v.sort_unstable();
        v
    }

    fn is_solo(&self, n: NodeId) -> bool {
        self.graph.class_size(n) == 1
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn key128(x: u64, salt: u64) -> u128 {
    let hi = splitmix64(x ^ salt);
    let lo = splitmix64(hi ^ x.rotate_left(29) ^ 0x5851_F42D_4C95_7F2D);
    ((hi as u128) << 64) | lo as u128
}

/// Order-independent key of an edge; XOR-combined into edge-set hashes.
pub(crate) fn edge_key(e: EdgeId) -> u128 {
    key128(e.0 as u64, 0xA076_1D64_78BD_642F)
}

pub(crate) fn root_key(n: NodeId) -> u128 {
    key128(n.0 as u64, 0xE703_7ED1_A0B4_28DB)
}

/// Identity of a solution: its edge set, or its single node when edgeless.
pub(crate) fn solution_key(root: NodeId, edge_hash: u128, size: u32) -> u128 {
    if size == 0 {
        key128(root.0 as u64, 0x8EBC_6AF0_9C88_C6E3)
    } else {
        edge_hash
    }
}

#[derive(Debug)]
enum Shape {
    Seed,
    Grow { base: Arc<PartialTree>, edge: EdgeId },
    Merge { left: Arc<PartialTree>, right: Arc<PartialTree> },
}

/// A rooted tree of graph edges built during search.
#[derive(Debug)]
pub struct PartialTree {
    root: NodeId,
    coverage: u64,
    /// Keywords matched by a non-root node whose equivalence class is a
    /// singleton.
    solo: u64,
    size: u32,
    root_degree: u32,
    edge_hash: u128,
    signature: u128,
    /// Per keyword: representative of the class its matches belong to.
    classes: Box<[NodeId]>,
    /// Per keyword: number of matching nodes in the tree.
    counts: Box<[u32]>,
    /// Distinct keyword masks of non-root leaves.
    leaf_masks: Box<[u64]>,
    /// Set eagerly for seeds and grown trees; merged trees answer
    /// membership through their inputs until a Grow needs the full set.
    nodes: OnceLock<RedBlackTreeSetSync<NodeId>>,
    /// Neighbors of the root inside the tree.
    root_children: Box<[NodeId]>,
    shape: Shape,
}

impl PartialTree {
    pub(crate) fn seed(ctx: &MatchContext<'_>, n: NodeId) -> PartialTree {
        let mask = ctx.mask(n);
        let rep = ctx.graph.representative(n);
        let mut classes = vec![NodeId::NONE; ctx.keyword_count];
        let mut counts = vec![0u32; ctx.keyword_count];
        for k in bits(mask) {
            classes[k] = rep;
            counts[k] = 1;
        }
        PartialTree {
            root: n,
            coverage: mask,
            solo: 0,
            size: 0,
            root_degree: 0,
            edge_hash: 0,
            signature: root_key(n),
            classes: classes.into(),
            counts: counts.into(),
            leaf_masks: Box::new([]),
            nodes: OnceLock::from(RedBlackTreeSetSync::new_sync().insert(n)),
            root_children: Box::new([]),
            shape: Shape::Seed,
        }
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn coverage(&self) -> u64 {
        self.coverage
    }

    /// Number of edges.
    pub fn size(&self) -> u32 {
        self.size
    }

    pub fn signature(&self) -> u128 {
        self.signature
    }

    pub(crate) fn edge_hash(&self) -> u128 {
        self.edge_hash
    }

    pub(crate) fn solo(&self) -> u64 {
        self.solo
    }

    pub(crate) fn classes(&self) -> &[NodeId] {
        &self.classes
    }

    /// Whether `n` is one of the tree's nodes.
    pub fn contains_node(&self, n: NodeId) -> bool {
        if let Some(set) = self.nodes.get() {
            return set.contains(&n);
        }
        match &self.shape {
            Shape::Merge { left, right } => left.contains_node(n) || right.contains_node(n),
            _ => unreachable!("node set is set eagerly outside merges"),
        }
    }

    /// Calls `f` on every node, possibly more than once; stops early when
    /// `f` returns false.
    fn visit_nodes(&self, f: &mut impl FnMut(NodeId) -> bool) -> bool {
        if let Some(set) = self.nodes.get() {
            return set.iter().all(|n| f(*n));
        }
        match &self.shape {
            Shape::Merge { left, right } => left.visit_nodes(f) && right.visit_nodes(f),
            _ => unreachable!("node set is set eagerly outside merges"),
        }
    }

    fn node_set(&self) -> &RedBlackTreeSetSync<NodeId> {
        self.nodes.get_or_init(|| {
            let Shape::Merge { left, right } = &self.shape else {
                unreachable!("node set is set eagerly outside merges")
            };
            let (small, large) = if left.size <= right.size { (left, right) } else { (right, left) };
            let mut set = large.node_set().clone();
            small.visit_nodes(&mut |n| {
                set.insert_mut(n);
                true
            });
            set
        })
    }

    /// Sorted node set.
    pub fn nodes(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.size as usize + 1);
        self.visit_nodes(&mut |n| {
            out.push(n);
            true
        });
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Sorted edge set.
    pub fn edges(&self) -> Vec<EdgeId> {
        let mut out = Vec::with_capacity(self.size as usize);
        let mut stack: Vec<&PartialTree> = vec![self];
        while let Some(t) = stack.pop() {
            match &t.shape {
                Shape::Seed => {}
                Shape::Grow { base, edge } => {
                    out.push(*edge);
                    stack.push(base);
                }
                Shape::Merge { left, right } => {
                    stack.push(left);
                    stack.push(right);
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// True when some non-root leaf's keywords are all matched elsewhere in
    /// the tree. Such a leaf stays a leaf in every extension, so no
    /// extension is minimal.
    fn has_redundant_leaf(&self) -> bool {
        self.leaf_masks
            .iter()
            .any(|&mask| bits(mask).all(|k| self.counts[k] >= 2))
    }

    /// Minimality test for a tree covering every keyword. Non-root leaves
    /// are already known to be essential.
    pub(crate) fn is_minimal_answer(&self, ctx: &MatchContext<'_>) -> bool {
        if self.coverage != ctx.full {
            return false;
        }
        if self.root_degree == 1 {
            let mask = ctx.mask(self.root);
            if mask == 0 || bits(mask).all(|k| self.counts[k] >= 2) {
                return false;
            }
        }
        true
    }

    /// Extends the tree over `edge`, which must be incident to the root. The
    /// other endpoint becomes the new root. Returns `None` on a cycle, on two
    /// non-equivalent matches of one keyword, or when the result has a
    /// redundant leaf.
    pub(crate) fn grow(self: &Arc<Self>, edge: EdgeId, ctx: &MatchContext<'_>) -> Option<PartialTree> {
        let g = ctx.graph;
        let rec = g.edge(edge);
        debug_assert!(rec.source == self.root || rec.target == self.root);
        let next = g.other_end(edge, self.root);
        if self.contains_node(next) {
            return None;
        }
        let next_mask = ctx.mask(next);
        let mut classes = self.classes.clone();
        let mut counts = self.counts.clone();
        if next_mask != 0 {
            let rep = g.representative(next);
            for k in bits(next_mask) {
                if !classes[k].is_none() && classes[k] != rep {
                    return None;
                }
                classes[k] = rep;
                counts[k] += 1;
            }
        }
        let old_root_mask = ctx.mask(self.root);
        let mut solo = self.solo;
        if old_root_mask != 0 && ctx.is_solo(self.root) {
            solo |= old_root_mask;
        }
        let leaf_masks = if self.size == 0 {
            vec![old_root_mask].into_boxed_slice()
        } else {
            self.leaf_masks.clone()
        };
        let edge_hash = self.edge_hash ^ edge_key(edge);
        let tree = PartialTree {
            root: next,
            coverage: self.coverage | next_mask,
            solo,
            size: self.size + 1,
            root_degree: 1,
            edge_hash,
            signature: edge_hash ^ root_key(next),
            classes,
            counts,
            leaf_masks,
            nodes: OnceLock::from(self.node_set().insert(next)),
            root_children: Box::new([self.root]),
            shape: Shape::Grow {
                base: Arc::clone(self),
                edge,
            },
        };
        if tree.has_redundant_leaf() {
            return None;
        }
        Some(tree)
    }

    /// Cheap necessary condition for merging trees with these summaries.
    pub(crate) fn summaries_compatible(
        cov_a: u64,
        solo_a: u64,
        classes_a: &[NodeId],
        cov_b: u64,
        solo_b: u64,
        classes_b: &[NodeId],
    ) -> bool {
        let overlap = cov_a & cov_b;
        if overlap & (solo_a | solo_b) != 0 {
            return false;
        }
        bits(overlap).all(|k| classes_a[k] == classes_b[k])
    }

    /// Unions two trees sharing a root. Both must have at least one edge and
    /// they may share no node other than the root. A keyword matched by both
    /// is only allowed when all its matches lie in one equivalence class.
    pub(crate) fn merge(
        left: &Arc<Self>,
        right: &Arc<Self>,
        ctx: &MatchContext<'_>,
    ) -> Option<PartialTree> {
        if left.root != right.root || left.size == 0 || right.size == 0 {
            return None;
        }
        if !Self::summaries_compatible(
            left.coverage,
            left.solo,
            &left.classes,
            right.coverage,
            right.solo,
            &right.classes,
        ) {
            return None;
        }
        if left.root_children.iter().any(|c| right.root_children.contains(c)) {
            return None;
        }
        let (small, large) = if left.size <= right.size {
            (left, right)
        } else {
            (right, left)
        };
        let root = left.root;
        if !small.visit_nodes(&mut |n| n == root || !large.contains_node(n)) {
            return None;
        }

        let root_mask = ctx.mask(root);
        let mut classes = left.classes.clone();
        let mut counts = left.counts.clone();
        for k in 0..ctx.keyword_count {
            if classes[k].is_none() {
                classes[k] = right.classes[k];
            }
            counts[k] += right.counts[k];
            if root_mask & (1 << k) != 0 {
                counts[k] -= 1;
            }
        }
        let mut leaf_masks: Vec<u64> = left.leaf_masks.iter().chain(right.leaf_masks.iter()).copied().collect();
        leaf_masks.sort_unstable();
        leaf_masks.dedup();
        let edge_hash = left.edge_hash ^ right.edge_hash;
        let tree = PartialTree {
            root,
            coverage: left.coverage | right.coverage,
            solo: left.solo | right.solo,
            size: left.size + right.size,
            root_degree: left.root_degree + right.root_degree,
            edge_hash,
            signature: edge_hash ^ root_key(root),
            classes,
            counts,
            leaf_masks: leaf_masks.into(),
            nodes: OnceLock::new(),
            root_children: left.root_children.iter().chain(right.root_children.iter()).copied().collect(),
            shape: Shape::Merge {
                left: Arc::clone(left),
                right: Arc::clone(right),
            },
        };
        if tree.has_redundant_leaf() {
            return None;
        }
        Some(tree)
    }
}

/// Indices of set bits, ascending.
pub(crate) fn bits(mut mask: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if mask == 0 {
            None
        } else {
            let k = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            Some(k)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{DataModel, EdgeType, GraphBuilder, NodeType};

    fn kw(list: &[&str]) -> Vec<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    /// a(k0) =e0= b =e1= c(k1), plus a second parallel edge e2 between a and b.
    fn small() -> Graph {
        let mut b = GraphBuilder::new();
        let s = b.add_source(DataModel::Synthetic, "t").unwrap();
        let a = b.add_node(s, NodeType::JsonValue, "k0").unwrap();
        let m = b.add_node(s, NodeType::JsonValue, "mid").unwrap();
        let c = b.add_node(s, NodeType::JsonValue, "k1").unwrap();
        b.add_edge(a, m, EdgeType::Structure, "x", None).unwrap();
        b.add_edge(m, c, EdgeType::Structure, "y", None).unwrap();
        b.add_edge(a, m, EdgeType::Structure, "z", None).unwrap();
        b.freeze()
    }

    #[test]
    fn grow_reroots_and_rejects_cycles() {
        let g = small();
        let ctx = MatchContext::new(&g, &kw(&["k0", "k1"]));
        let seed = Arc::new(PartialTree::seed(&ctx, NodeId(0)));
        let t1 = Arc::new(seed.grow(EdgeId(0), &ctx).unwrap());
        assert_eq!(t1.root(), NodeId(1));
        assert_eq!(t1.edges(), vec![EdgeId(0)]);
        assert_eq!(t1.nodes(), vec![NodeId(0), NodeId(1)]);
        // back over the same edge, or over the parallel one, closes a cycle
        assert!(t1.grow(EdgeId(0), &ctx).is_none());
        assert!(t1.grow(EdgeId(2), &ctx).is_none());
        let t2 = seed.grow(EdgeId(2), &ctx).unwrap();
        assert_ne!(t1.signature(), t2.signature());
        let full = Arc::new(t1.grow(EdgeId(1), &ctx).unwrap());
        assert_eq!(full.coverage(), 0b11);
        assert!(full.is_minimal_answer(&ctx));
    }

    #[test]
    fn merge_requires_disjoint_nodes_and_edges() {
        let g = small();
        let ctx = MatchContext::new(&g, &kw(&["k0", "k1"]));
        let a = Arc::new(PartialTree::seed(&ctx, NodeId(0)));
        let c = Arc::new(PartialTree::seed(&ctx, NodeId(2)));
        let left = Arc::new(a.grow(EdgeId(0), &ctx).unwrap());
        let right = Arc::new(c.grow(EdgeId(1), &ctx).unwrap());
        let merged = PartialTree::merge(&left, &right, &ctx).unwrap();
        assert_eq!(merged.root(), NodeId(1));
        assert_eq!(merged.edges(), vec![EdgeId(0), EdgeId(1)]);
        assert_eq!(merged.signature(), {
            let grown = Arc::new(right.grow(EdgeId(0), &ctx).unwrap());
            grown.edge_hash() ^ root_key(NodeId(1))
        });
        // same tree twice, and the seed (no edges), are rejected
        assert!(PartialTree::merge(&left, &left, &ctx).is_none());
        assert!(PartialTree::merge(&left, &a, &ctx).is_none());
        // two trees holding the same k0 node overlap
        let left2 = Arc::new(a.grow(EdgeId(2), &ctx).unwrap());
        assert!(PartialTree::merge(&left, &left2, &ctx).is_none());
    }

    #[test]
    fn non_equivalent_duplicate_match_is_rejected() {
        let mut b = GraphBuilder::new();
        let s = b.add_source(DataModel::Synthetic, "t").unwrap();
        let a = b.add_node(s, NodeType::JsonValue, "k0").unwrap();
        let a2 = b.add_node(s, NodeType::JsonValue, "k0").unwrap();
        b.add_edge(a, a2, EdgeType::Structure, "", None).unwrap();
        let g = b.freeze();
        let ctx = MatchContext::new(&g, &kw(&["k0", "k1"]));
        let seed = Arc::new(PartialTree::seed(&ctx, a));
        assert!(seed.grow(EdgeId(0), &ctx).is_none());
    }

    #[test]
    fn equivalent_leaf_is_redundant() {
        let mut b = GraphBuilder::new();
        let s = b.add_source(DataModel::Synthetic, "t").unwrap();
        let a = b.add_node(s, NodeType::JsonValue, "k0").unwrap();
        let a2 = b.add_node(s, NodeType::JsonValue, "k0").unwrap();
        b.union_equivalent(a, a2).unwrap();
        let g = b.freeze();
        let ctx = MatchContext::new(&g, &kw(&["k0", "k1"]));
        let seed = Arc::new(PartialTree::seed(&ctx, a2));
        let e = g.neighbors(a2).next().unwrap().edge;
        assert_eq!(g.edge_meta(e).edge_type, EdgeType::Equivalence);
        assert!(seed.grow(e, &ctx).is_none());
    }

    #[test]
    fn bit_iteration() {
        assert_eq!(bits(0b1010_0001).collect::<Vec<_>>(), vec![0, 5, 7]);
        assert_eq!(bits(0).count(), 0);
    }
}
