use std::collections::HashMap;

use graphlens::graph::{DataModel, EdgeType, Graph, GraphBuilder, GraphConfig, NodeId, NodeType};
use graphlens::snapshot;
use graphlens::text;
use proptest::prelude::*;

const WORDS: &[&str] = &["alice", "ABC Pharma", "health-star", "Zoë", "paris", "kwd0", "x y z", "", "ÉCOLE"];
const LABELS: &[&str] = &["", "name", "knows", "spouse"];

#[derive(Debug, Clone)]
struct Plan {
    k: usize,
    labels: Vec<usize>,
    edges: Vec<(usize, usize, usize)>,
    unions: Vec<(usize, usize)>,
}

fn plan() -> impl Strategy<Value = Plan> {
    (1usize..6, 1usize..14).prop_flat_map(|(k, n)| {
        (
            Just(k),
            prop::collection::vec(0..WORDS.len(), n),
            prop::collection::vec((0..n, 0..n, 0..LABELS.len()), 0..30),
            prop::collection::vec((0..n, 0..n), 0..5),
        )
            .prop_map(|(k, labels, edges, unions)| Plan {
                k,
                labels,
                edges,
                unions,
            })
    })
}

fn build(p: &Plan) -> Graph {
    let mut b = GraphBuilder::with_config(GraphConfig { neighbor_slots: p.k });
    let s = b.add_source(DataModel::Json, "p").unwrap();
    let ids: Vec<NodeId> = p
        .labels
        .iter()
        .map(|w| b.add_node(s, NodeType::JsonValue, WORDS[*w]).unwrap())
        .collect();
    for (a, c, l) in &p.edges {
        if a != c {
            b.add_edge(ids[*a], ids[*c], EdgeType::Structure, LABELS[*l], None).unwrap();
        }
    }
    for (a, c) in &p.unions {
        b.union_equivalent(ids[*a], ids[*c]).unwrap();
    }
    b.freeze()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn adjacency_is_complete(p in plan()) {
        let g = build(&p);
        let mut seen: HashMap<_, usize> = HashMap::new();
        for n in g.node_ids() {
            let nbs: Vec<_> = g.neighbors(n).collect();
            prop_assert_eq!(nbs.len(), g.degree(n));
            prop_assert!(g.static_slots(n).len() == p.k);
            for nb in nbs {
                let e = g.edge(nb.edge);
                prop_assert!(e.source == n || e.target == n);
                prop_assert_eq!(nb.other, g.other_end(nb.edge, n));
                *seen.entry(nb.edge).or_default() += 1;
            }
        }
        prop_assert_eq!(seen.len(), g.edge_count());
        prop_assert!(seen.values().all(|c| *c == 2));
    }

    #[test]
    fn specificity_bounds(p in plan()) {
        let g = build(&p);
        for e in g.edge_ids() {
            let s = g.specificity(e);
            prop_assert!(s > 0.0 && s <= 1.0);
            let rec = g.edge(e);
            let label = &g.edge_meta(e).label;
            let same = |n| g.neighbors(n).filter(|nb| &g.edge_meta(nb.edge).label == label).count();
            let expect = 1.0 / same(rec.source).max(same(rec.target)) as f64;
            prop_assert_eq!(s, expect);
        }
    }

    #[test]
    fn equivalence_compaction(p in plan()) {
        let g = build(&p);
        let mut classes: HashMap<NodeId, usize> = HashMap::new();
        for n in g.node_ids() {
            let r = g.representative(n);
            prop_assert_eq!(g.representative(r), r);
            prop_assert!(r <= n);
            *classes.entry(r).or_default() += 1;
        }
        let mut eq_edges: HashMap<NodeId, usize> = HashMap::new();
        for e in g.edge_ids().filter(|e| g.edge_meta(*e).edge_type == EdgeType::Equivalence) {
            let rec = g.edge(e);
            prop_assert_eq!(rec.source, g.representative(rec.target));
            *eq_edges.entry(rec.source).or_default() += 1;
        }
        for (r, size) in classes {
            prop_assert_eq!(eq_edges.get(&r).copied().unwrap_or(0), size - 1);
            prop_assert_eq!(g.class_size(r) as usize, size);
        }
    }

    #[test]
    fn keyword_index_sound_and_complete(p in plan()) {
        let g = build(&p);
        let mut vocab: Vec<String> = WORDS.iter().flat_map(|w| text::tokens(w)).collect();
        vocab.push("absent".into());
        for t in vocab {
            for n in g.node_ids() {
                let has = text::tokens(g.label(n)).contains(&t);
                prop_assert_eq!(g.lookup(&t).contains(&n), has);
            }
        }
    }

    #[test]
    fn freeze_is_deterministic(p in plan()) {
        prop_assert_eq!(snapshot::encode(&build(&p), 0), snapshot::encode(&build(&p), 0));
    }
}

#[test]
fn chain_interior_nodes_have_four_edges() {
    let g = graphlens::synth::gen_chain(2);
    let interior: Vec<_> = g.node_ids().filter(|n| g.degree(*n) == 4).collect();
    assert_eq!(interior.len(), 1);
    assert_eq!(g.edge_count(), 4);
}

#[test]
fn seven_edges_split_between_slots_and_overflow() {
    let mut b = GraphBuilder::new();
    let s = b.add_source(DataModel::Xml, "x").unwrap();
    let hub = b.add_node(s, NodeType::XmlElement, "hub").unwrap();
    let mut expect = Vec::new();
    for i in 0..7 {
        let leaf = b.add_node(s, NodeType::XmlText, format!("leaf {i}")).unwrap();
        b.add_edge(hub, leaf, EdgeType::Structure, "", None).unwrap();
        expect.push(leaf);
    }
    let g = b.freeze();
    assert_eq!(g.static_slots(hub).iter().filter(|e| !e.is_none()).count(), 5);
    assert_eq!(g.overflow(hub).len(), 2);
    let mut got: Vec<_> = g.neighbors(hub).map(|nb| nb.other).collect();
    got.sort();
    assert_eq!(got, expect);
    // all seven edges share the empty label
    assert!(g.edge_ids().all(|e| g.specificity(e) == 1.0 / 7.0));
}

#[test]
fn healthstar_inc_matches_token_lookup() {
    let mut b = GraphBuilder::new();
    let s = b.add_source(DataModel::Html, "h").unwrap();
    let n = b.add_node(s, NodeType::Html, "HealthStar Inc").unwrap();
    let g = b.freeze();
    assert_eq!(g.lookup("healthstar"), &[n]);
    assert_eq!(g.lookup("HEALTHSTAR"), &[n]);
    assert!(g.lookup("health").is_empty());
    assert!(GraphBuilder::new().freeze().lookup("x").is_empty());
}

#[test]
fn star_extremities_share_kwd0() {
    let g = graphlens::synth::gen_star(4, 3);
    let hits = g.lookup("kwd0");
    assert_eq!(hits.len(), 4);
    assert!(hits.iter().all(|n| g.representative(*n) == hits[0]));
}
