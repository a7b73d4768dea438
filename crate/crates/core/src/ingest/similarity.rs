use std::collections::{BTreeSet, HashMap};

use serde::Serialize;

use super::{IngestError, Ingestor};
use crate::graph::{similarity_label, EdgeType, NodeId};
use crate::text;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityConfig {
    /// Pairs strictly above this value are linked.
    pub threshold: f64,
    /// Only compare labels sharing a token.
    pub blocking: bool,
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        SimilarityConfig {
            threshold: 0.8,
            blocking: true,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct LinkReport {
    pub compared: u64,
    pub same_as: u64,
    pub equivalences: u64,
}

/// `1 - levenshtein / max_len` over case-folded, trimmed labels, counted in
/// characters.
pub fn similarity(a: &str, b: &str) -> f64 {
    strsim::normalized_levenshtein(&text::fold(a.trim()), &text::fold(b.trim()))
}

impl Ingestor {
    /// Compares leaf values and entity nodes. Similarity 1 unions the two
    /// equivalence classes; similarity in `(threshold, 1)` adds a sameAs
    /// edge labeled with the value. Pairs already equivalent or already
    /// linked are skipped, so repeated runs add nothing.
    pub fn link_similar(&mut self, config: SimilarityConfig) -> Result<LinkReport, IngestError> {
        if !(config.threshold > 0.0 && config.threshold <= 1.0) {
            return Err(IngestError::Threshold(config.threshold));
        }
        let mut cands: Vec<NodeId> = self.values.iter().copied().chain(self.entities.values().copied()).collect();
        cands.sort_unstable();
        cands.dedup();
        cands.retain(|n| !self.builder.node_label(*n).trim().is_empty());

        let pairs: BTreeSet<(NodeId, NodeId)> = if config.blocking {
            let mut blocks: HashMap<String, Vec<NodeId>> = HashMap::new();
            for &n in &cands {
                let mut toks = text::tokens(self.builder.node_label(n));
                toks.sort();
                toks.dedup();
                for t in toks {
                    blocks.entry(t).or_default().push(n);
                }
            }
            let mut pairs = BTreeSet::new();
            for members in blocks.values() {
                for (i, a) in members.iter().enumerate() {
                    for b in &members[i + 1..] {
                        pairs.insert((*a, *b));
                    }
                }
            }
            pairs
        } else {
            cands
                .iter()
                .enumerate()
                .flat_map(|(i, a)| cands[i + 1..].iter().map(move |b| (*a, *b)))
                .collect()
        };

        let mut report = LinkReport::default();
        for (a, b) in pairs {
            if self.builder.representative(a) == self.builder.representative(b) || self.same_as.contains(&(a, b)) {
                continue;
            }
            report.compared += 1;
            let sim = similarity(self.builder.node_label(a), self.builder.node_label(b));
            if sim >= 1.0 {
                self.builder.union_equivalent(a, b)?;
                report.equivalences += 1;
            } else if sim > config.threshold {
                self.builder.add_edge(a, b, EdgeType::SameAs, similarity_label(sim), Some(sim))?;
                self.same_as.insert((a, b));
                report.same_as += 1;
            }
        }
        self.counters.same_as_edges += report.same_as;
        self.counters.equivalences += report.equivalences;
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::DefaultExtractor;

    /// Textbook dynamic-programming edit distance over chars.
    fn lev(a: &str, b: &str) -> usize {
        let (a, b): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
        let mut prev: Vec<usize> = (0..=b.len()).collect();
        for i in 1..=a.len() {
            let mut cur = vec![i; b.len() + 1];
            for j in 1..=b.len() {
                let sub = prev[j - 1] + usize::from(a[i - 1] != b[j - 1]);
                cur[j] = sub.min(prev[j] + 1).min(cur[j - 1] + 1);
            }
            prev = cur;
        }
        prev[b.len()]
    }

    fn oracle(a: &str, b: &str) -> f64 {
        let (a, b) = (a.to_lowercase(), b.to_lowercase());
        let m = a.chars().count().max(b.chars().count());
        1.0 - lev(&a, &b) as f64 / m as f64
    }

    #[test]
    fn similarity_matches_edit_distance_oracle() {
        for (a, b) in [
            ("HealthStar", "HealthStar Inc."),
            ("ABCPharma", "abcpharma"),
            ("kitten", "sitting"),
            ("Zoë", "Zoe"),
            ("x", "completely different"),
        ] {
            assert!((similarity(a, b) - oracle(a, b)).abs() < 1e-12, "{a} / {b}");
        }
        assert!((similarity("HealthStar", "HealthStar Inc.") - 2.0 / 3.0).abs() < 1e-12);
    }

    fn two_values(a: &str, b: &str) -> Ingestor {
        let mut ing = Ingestor::new(DefaultExtractor::new().without_patterns());
        let json = serde_json::json!({ "x": a, "y": b }).to_string();
        ing.ingest_json("v.json", &json).unwrap();
        ing
    }

    #[test]
    fn identical_labels_become_equivalent() {
        let mut ing = two_values("ABCPharma", "ABCPharma");
        let r = ing.link_similar(SimilarityConfig::default()).unwrap();
        assert_eq!((r.same_as, r.equivalences), (0, 1));
        let vals = ing.value_nodes().to_vec();
        assert_eq!(ing.builder().representative(vals[1]), vals[0]);
        let again = ing.link_similar(SimilarityConfig::default()).unwrap();
        assert_eq!(again, LinkReport::default());
    }

    #[test]
    fn near_labels_get_same_as_above_threshold_only() {
        let sim = oracle("HealthStar", "HealthStar Inc.");
        let mut ing = two_values("HealthStar", "HealthStar Inc.");
        let r = ing.link_similar(SimilarityConfig::default()).unwrap();
        assert_eq!(r.same_as, 0, "{sim} is not above 0.8");

        let mut ing = two_values("HealthStar", "HealthStar Inc.");
        let r = ing
            .link_similar(SimilarityConfig {
                threshold: 0.6,
                blocking: true,
            })
            .unwrap();
        assert_eq!(r.same_as, 1);
        let g = ing.freeze();
        let e = g.edge_ids().find(|e| g.edge_meta(*e).edge_type == EdgeType::SameAs).unwrap();
        assert_eq!(g.edge_meta(e).label, "0.67");
        assert!((g.edge_meta(e).confidence - sim).abs() < 1e-12);

        let mut ing = two_values("HealthStar Inc", "HealthStar Inc.");
        assert_eq!(ing.link_similar(SimilarityConfig::default()).unwrap().same_as, 1);
    }

    #[test]
    fn disjoint_labels_are_not_linked() {
        let mut ing = two_values("apples", "oranges");
        let r = ing
            .link_similar(SimilarityConfig {
                threshold: 0.8,
                blocking: false,
            })
            .unwrap();
        assert_eq!((r.compared, r.same_as, r.equivalences), (1, 0, 0));
        let mut ing = two_values("apples", "oranges");
        assert_eq!(ing.link_similar(SimilarityConfig::default()).unwrap().compared, 0);
        assert!(ing.link_similar(SimilarityConfig { threshold: 0.0, blocking: true }).is_err());
    }
}
