mod common;

use std::collections::BTreeMap;

use graphlens::graph::{EdgeType, NodeType};
use graphlens::ingest::{DefaultExtractor, Ingestor};
use graphlens::policy::Policy;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use common::Recording;

const TAGS: &[&str] = &["A", "B", "C", "D"];

struct Elem {
    tag: &'static str,
    text: Option<String>,
    children: Vec<Elem>,
}

fn gen_elem(rng: &mut StdRng, tag: &'static str, depth: usize, next: &mut usize) -> Elem {
    let text = rng.gen_bool(0.6).then(|| {
        *next += 1;
        format!("w{next}")
    });
    let n = if depth >= 4 { 0 } else { rng.gen_range(0..4) };
    let children = (0..n)
        .map(|_| {
            let tag = TAGS[rng.gen_range(0..TAGS.len())];
            gen_elem(rng, tag, depth + 1, next)
        })
        .collect();
    Elem { tag, text, children }
}

fn to_xml(e: &Elem, out: &mut String) {
    out.push_str(&format!("<{}>", e.tag));
    if let Some(t) = &e.text {
        out.push_str(t);
    }
    for c in &e.children {
        to_xml(c, out);
    }
    out.push_str(&format!("</{}>", e.tag));
}

fn paths(e: &Elem, prefix: &str, out: &mut Vec<String>) {
    let p = if prefix.is_empty() { e.tag.to_string() } else { format!("{prefix}.{}", e.tag) };
    for c in &e.children {
        paths(c, &p, out);
    }
    out.push(p);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Default,
    Skip,
    Force,
}

/// Expected outcome per text, computed from the rule list directly.
fn expected(e: &Elem, prefix: &str, rules: &[(String, &str)], covered: bool, out: &mut BTreeMap<String, Outcome>) {
    let p = if prefix.is_empty() { e.tag.to_string() } else { format!("{prefix}.{}", e.tag) };
    let covered = covered
        || e
            .children
            .iter()
            .any(|c| rules.iter().any(|(r, a)| *a == "skipAll" && *r == format!("{p}.{}", c.tag)));
    if let Some(t) = &e.text {
        let has = |act: &str| rules.iter().any(|(r, a)| *a == act && *r == p);
        let o = if has("force") {
            Outcome::Force
        } else if covered || has("skip") {
            Outcome::Skip
        } else {
            Outcome::Default
        };
        out.insert(t.clone(), o);
    }
    for c in &e.children {
        expected(c, &p, rules, covered, out);
    }
}

fn policy_text(rules: &[(String, &str)]) -> String {
    rules
        .iter()
        .map(|(p, a)| match *a {
            "force" => format!("{p} force Person\n"),
            a => format!("{p} {a}\n"),
        })
        .collect()
}

fn run(xml: &str, policy: &str) -> (Ingestor, Vec<String>) {
    let rec = Recording::new(DefaultExtractor::new().without_patterns());
    let calls = rec.calls.clone();
    let mut ing = Ingestor::new(rec);
    ing.set_policy(Policy::parse(policy).unwrap());
    ing.ingest_xml("doc.xml", xml).unwrap();
    let calls = calls.lock().unwrap().clone();
    (ing, calls)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn suppression_force_and_monotonicity(seed in any::<u64>(), nrules in 0usize..5) {
        let mut rng = StdRng::seed_from_u64(seed);
        let mut next = 0;
        let root = gen_elem(&mut rng, "R", 0, &mut next);
        let mut xml = String::new();
        to_xml(&root, &mut xml);
        let mut all = Vec::new();
        paths(&root, "", &mut all);
        all.sort();
        all.dedup();
        let deep: Vec<&String> = all.iter().filter(|p| p.contains('.')).collect();
        let mut rules: Vec<(String, &str)> = Vec::new();
        for _ in 0..nrules {
            let act = ["skip", "skipAll", "force"][rng.gen_range(0..3)];
            let pool: Vec<&String> = if act == "skipAll" { deep.clone() } else { all.iter().collect() };
            if let Some(p) = pool.get(rng.gen_range(0..pool.len().max(1))) {
                rules.push(((*p).clone(), act));
            }
        }

        let mut want = BTreeMap::new();
        expected(&root, "", &rules, false, &mut want);
        let (mut ing, calls) = run(&xml, &policy_text(&rules));

        let mut got_calls = calls.clone();
        got_calls.sort();
        let want_calls: Vec<String> =
            want.iter().filter(|(_, o)| **o == Outcome::Default).map(|(t, _)| t.clone()).collect();
        prop_assert_eq!(got_calls, want_calls);
        let n_force = want.values().filter(|o| **o == Outcome::Force).count();
        let n_skip = want.values().filter(|o| **o == Outcome::Skip).count();
        prop_assert_eq!(ing.counters().forced_nodes as usize, n_force);
        prop_assert_eq!(ing.counters().skipped_nodes as usize, n_skip);

        let g = ing.freeze();
        for n in g.node_ids().filter(|n| g.node_meta(*n).node_type == NodeType::XmlText) {
            let ext: Vec<_> = g
                .neighbors(n)
                .filter(|nb| g.edge_meta(nb.edge).edge_type == EdgeType::Extraction)
                .collect();
            if want[g.label(n)] == Outcome::Force {
                prop_assert_eq!(ext.len(), 1);
                prop_assert_eq!(g.node_meta(ext[0].other).node_type, NodeType::EntityPerson);
                prop_assert_eq!(g.label(ext[0].other), g.label(n));
            } else {
                prop_assert!(ext.is_empty());
            }
        }

        // one more skip rule never adds extractor calls
        if let Some(p) = all.get(rng.gen_range(0..all.len())) {
            let mut more = rules.clone();
            more.push((p.clone(), "skip"));
            let (_, more_calls) = run(&xml, &policy_text(&more));
            prop_assert!(more_calls.len() <= calls.len());
        }
    }
}

#[test]
fn relational_and_rdf_contexts_are_model_scoped() {
    let pol = "relational:people.name force Person\nrdf:name skip\nhierarchical:people.name skip\n";
    let rec = Recording::new(DefaultExtractor::new().without_patterns());
    let calls = rec.calls.clone();
    let mut ing = Ingestor::new(rec);
    ing.set_policy(Policy::parse(pol).unwrap());
    ing.ingest_rel("people.csv", "people", "name,city\nAlice,Paris\n").unwrap();
    ing.ingest_rdf(
        "kb.nt",
        "<http://ex.org/a> <http://xmlns.com/foaf/0.1/name> \"Bob\" .\n<http://ex.org/a> <http://ex.org/city> \"Lyon\" .\n",
    )
    .unwrap();
    ing.ingest_json("p.json", r#"{"people":{"name":"Carol"}}"#).unwrap();
    let mut calls = calls.lock().unwrap().clone();
    calls.sort();
    assert_eq!(calls, vec!["Lyon", "Paris"]);
    assert_eq!(ing.counters().forced_nodes, 1);
    assert_eq!(ing.counters().skipped_nodes, 2);
}

#[test]
fn malformed_policies_report_line_numbers() {
    let err = Policy::parse("# ok\nA.B skip\nA.C drop\n").unwrap_err();
    assert_eq!(err.line, 3);
    let err = Policy::parse("A.B force Animal").unwrap_err();
    assert_eq!(err.line, 1);
    assert!(Policy::parse("skip").is_err());
}
