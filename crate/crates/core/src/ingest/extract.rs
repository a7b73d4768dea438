use std::collections::HashMap;
use std::fmt;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::graph::NodeType;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EntityType {
    Person,
    Organization,
    Location,
}

impl EntityType {
    pub const ALL: [EntityType; 3] = [EntityType::Person, EntityType::Organization, EntityType::Location];

    pub fn name(self) -> &'static str {
        match self {
            EntityType::Person => "Person",
            EntityType::Organization => "Organization",
            EntityType::Location => "Location",
        }
    }

    /// Case-insensitive; also accepts `Org` and `Loc`.
    pub fn parse(s: &str) -> Option<EntityType> {
        match s.to_ascii_lowercase().as_str() {
            "person" => Some(EntityType::Person),
            "organization" | "organisation" | "org" => Some(EntityType::Organization),
            "location" | "loc" => Some(EntityType::Location),
            _ => None,
        }
    }

    pub fn node_type(self) -> NodeType {
        match self {
            EntityType::Person => NodeType::EntityPerson,
            EntityType::Organization => NodeType::EntityOrganization,
            EntityType::Location => NodeType::EntityLocation,
        }
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One entity mention; `surface` is `text[start..start + surface.len()]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractedEntity {
    pub entity_type: EntityType,
    pub surface: String,
    pub start: usize,
    pub confidence: f64,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("extraction failed: {0}")]
pub struct ExtractError(pub String);

/// Named-entity extraction over one text value. Must be deterministic.
pub trait Extractor: Send + Sync {
    fn extract(&self, text: &str) -> Result<Vec<ExtractedEntity>, ExtractError>;
}

pub const GAZETTEER_CONFIDENCE: f64 = 1.0;
pub const PATTERN_CONFIDENCE: f64 = 0.6;

const ORG_SUFFIXES: &[&str] = &[
    "inc", "corp", "corporation", "ltd", "llc", "gmbh", "sa", "ag", "plc", "co", "company", "group", "pharma",
    "pharmaceuticals", "laboratories", "labs", "university", "institute", "foundation", "hospital", "association",
];

const LEADING_STOPWORDS: &[&str] = &[
    "the", "a", "an", "this", "these", "that", "we", "our", "in", "on", "for", "from", "dr", "mr", "ms", "mrs", "prof",
];

/// Gazetteer lookup plus a capitalized-word-sequence pattern.
///
/// Gazetteer hits match whole tokens, case-insensitively, and win over
/// pattern hits they overlap. A pattern hit ending in an organization
/// suffix (`Inc`, `Pharma`, `University`, ...) is an Organization,
/// otherwise a Person.
#[derive(Debug, Clone)]
pub struct DefaultExtractor {
    entries: Vec<(Vec<String>, EntityType)>,
    by_first: HashMap<String, Vec<usize>>,
    pattern: Option<Regex>,
}

impl Default for DefaultExtractor {
    fn default() -> Self {
        Self::new()
    }
}

fn norm(token: &str) -> String {
    token.nfc().collect::<String>().to_lowercase()
}

/// Alphanumeric runs with their byte ranges.
fn spans(text: &str) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match (c.is_alphanumeric(), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, text.len()));
    }
    out
}

impl DefaultExtractor {
    pub fn new() -> Self {
        DefaultExtractor {
            entries: Vec::new(),
            by_first: HashMap::new(),
            pattern: Some(Regex::new(r"\p{Lu}[\p{L}\-']*(?:[ \t]+\p{Lu}[\p{L}\-']*\.?)+").unwrap()),
        }
    }

    /// Gazetteer hits only.
    pub fn without_patterns(mut self) -> Self {
        self.pattern = None;
        self
    }

    pub fn add_entry(&mut self, entity_type: EntityType, surface: &str) {
        let toks: Vec<String> = spans(surface).into_iter().map(|(a, b)| norm(&surface[a..b])).collect();
        if toks.is_empty() {
            return;
        }
        self.by_first.entry(toks[0].clone()).or_default().push(self.entries.len());
        self.entries.push((toks, entity_type));
    }

    /// One surface form per line; blank lines are ignored.
    pub fn load_gazetteer(&mut self, entity_type: EntityType, text: &str) -> usize {
        let mut n = 0;
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            self.add_entry(entity_type, line);
            n += 1;
        }
        n
    }

    /// Lines of `<Type> <surface>`, e.g. `Organization HealthStar Inc`.
    /// `#` starts a comment line.
    pub fn load_typed_gazetteer(&mut self, text: &str) -> Result<usize, String> {
        let mut n = 0;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (ty, surface) = line
                .split_once(char::is_whitespace)
                .ok_or_else(|| format!("line {}: expected `<Type> <surface>`", i + 1))?;
            let ty = EntityType::parse(ty).ok_or_else(|| format!("line {}: unknown entity type {ty:?}", i + 1))?;
            self.add_entry(ty, surface.trim());
            n += 1;
        }
        Ok(n)
    }

    pub fn gazetteer_len(&self) -> usize {
        self.entries.len()
    }

    fn gazetteer_hits(&self, text: &str, toks: &[(usize, usize)], out: &mut Vec<ExtractedEntity>) {
        let normed: Vec<String> = toks.iter().map(|(a, b)| norm(&text[*a..*b])).collect();
        let mut i = 0;
        while i < toks.len() {
            let best = self.by_first.get(&normed[i]).and_then(|cands| {
                cands
                    .iter()
                    .map(|c| &self.entries[*c])
                    .filter(|(e, _)| normed[i..].starts_with(e))
                    .max_by_key(|(e, _)| e.len())
            });
            match best {
                Some((e, ty)) => {
                    let (start, end) = (toks[i].0, toks[i + e.len() - 1].1);
                    out.push(ExtractedEntity {
                        entity_type: *ty,
                        surface: text[start..end].to_string(),
                        start,
                        confidence: GAZETTEER_CONFIDENCE,
                    });
                    i += e.len();
                }
                None => i += 1,
            }
        }
    }

    fn pattern_hits(&self, re: &Regex, text: &str, taken: &[(usize, usize)], out: &mut Vec<ExtractedEntity>) {
        for m in re.find_iter(text) {
            let (mut start, end) = (m.start(), m.end());
            if taken.iter().any(|(a, b)| start < *b && *a < end) {
                continue;
            }
            let mut words: Vec<(usize, usize)> = spans(&text[start..end])
                .into_iter()
                .map(|(a, b)| (a + start, b + start))
                .collect();
            while words.len() >= 2 && LEADING_STOPWORDS.contains(&norm(&text[words[0].0..words[0].1]).as_str()) {
                words.remove(0);
            }
            if words.len() < 2 {
                continue;
            }
            start = words[0].0;
            let surface = text[start..end].trim_end_matches('.');
            let last = norm(&text[words[words.len() - 1].0..words[words.len() - 1].1]);
            let ty = if ORG_SUFFIXES.contains(&last.as_str()) {
                EntityType::Organization
            } else {
                EntityType::Person
            };
            out.push(ExtractedEntity {
                entity_type: ty,
                surface: surface.to_string(),
                start,
                confidence: PATTERN_CONFIDENCE,
            });
        }
    }
}

impl Extractor for DefaultExtractor {
    fn extract(&self, text: &str) -> Result<Vec<ExtractedEntity>, ExtractError> {
        let toks = spans(text);
        let mut out = Vec::new();
        self.gazetteer_hits(text, &toks, &mut out);
        if let Some(re) = &self.pattern {
            let taken: Vec<(usize, usize)> = out.iter().map(|e| (e.start, e.start + e.surface.len())).collect();
            self.pattern_hits(re, text, &taken, &mut out);
        }
        out.sort_by_key(|e| e.start);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaz() -> DefaultExtractor {
        let mut x = DefaultExtractor::new();
        x.load_gazetteer(EntityType::Person, "Alice\n\n");
        x.load_gazetteer(EntityType::Organization, "ABCPharma\nHealth Star Group\n");
        x
    }

    #[test]
    fn typed_gazetteer_lines() {
        let mut x = DefaultExtractor::new().without_patterns();
        assert_eq!(x.load_typed_gazetteer("# people\nPerson Alice\norg  HealthStar Inc\n\n"), Ok(2));
        let found = x.extract("Funded by HealthStar Inc.").unwrap();
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].entity_type, EntityType::Organization);
        assert!(x.load_typed_gazetteer("Alice").is_err());
        assert!(x.load_typed_gazetteer("Company Foo").is_err());
    }

    #[test]
    fn gazetteer_matches_whole_tokens() {
        let x = gaz();
        let hits = x.extract("alice consults for ABCPharma; Malice is unrelated.").unwrap();
        let got: Vec<_> = hits.iter().map(|h| (h.entity_type, h.surface.as_str(), h.confidence)).collect();
        assert_eq!(
            got,
            vec![
                (EntityType::Person, "alice", 1.0),
                (EntityType::Organization, "ABCPharma", 1.0),
            ]
        );
        for h in &hits {
            assert_eq!(&"alice consults for ABCPharma; Malice is unrelated."[h.start..h.start + h.surface.len()], h.surface);
        }
    }

    #[test]
    fn multi_token_entries_prefer_longest() {
        let x = gaz();
        let text = "Funded by Health  Star Group in 2019";
        let hits = x.extract(text).unwrap();
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].surface, "Health  Star Group");
    }

    #[test]
    fn pattern_typing() {
        let x = DefaultExtractor::new();
        let hits = x.extract("The Bob Martin study was paid by Acme Pharma Inc. last year").unwrap();
        let got: Vec<_> = hits.iter().map(|h| (h.entity_type, h.surface.as_str(), h.confidence)).collect();
        assert_eq!(
            got,
            vec![
                (EntityType::Person, "Bob Martin", 0.6),
                (EntityType::Organization, "Acme Pharma Inc", 0.6),
            ]
        );
        assert!(DefaultExtractor::new().without_patterns().extract("Bob Martin").unwrap().is_empty());
    }

    #[test]
    fn entity_type_names() {
        assert_eq!(EntityType::parse("person"), Some(EntityType::Person));
        assert_eq!(EntityType::parse("ORG"), Some(EntityType::Organization));
        assert_eq!(EntityType::parse("Thing"), None);
        assert_eq!(EntityType::Location.node_type(), NodeType::EntityLocation);
    }
}
