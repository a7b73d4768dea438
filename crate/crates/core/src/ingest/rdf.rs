//! N-Triples subset: one `subject predicate object .` per line, IRIs in
//! angle brackets, `_:` blank nodes, and quoted literals with an optional
//! language tag or datatype.

use std::collections::HashMap;

use super::{IngestError, Ingestor};
use crate::graph::{DataModel, EdgeType, NodeId, NodeType};
use crate::policy::{ContextModel, Resolved};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Iri(String),
    Blank(String),
    Literal {
        value: String,
        lang: Option<String>,
        datatype: Option<String>,
    },
}

impl Term {
    fn label(&self) -> String {
        match self {
            Term::Iri(i) => i.clone(),
            Term::Blank(b) => format!("_:{b}"),
            Term::Literal { value, .. } => value.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Triple {
    pub subject: Term,
    pub predicate: String,
    pub object: Term,
}

struct Cursor<'a> {
    s: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn rest(&self) -> &'a str {
        &self.s[self.pos..]
    }

    fn skip_ws(&mut self) {
        let r = self.rest();
        self.pos += r.len() - r.trim_start().len();
    }

    fn eat(&mut self, c: char) -> bool {
        if self.rest().starts_with(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn iri(&mut self) -> Result<String, String> {
        let r = self.rest();
        let end = r.find('>').ok_or("unterminated IRI")?;
        let iri = &r[..end];
        if iri.is_empty() || iri.contains(char::is_whitespace) {
            return Err(format!("invalid IRI <{iri}>"));
        }
        self.pos += end + 1;
        Ok(iri.to_string())
    }

    fn name(&mut self) -> Result<String, String> {
        let r = self.rest();
        let end = r
            .find(|c: char| !(c.is_alphanumeric() || c == '_' || c == '-' || c == '.'))
            .unwrap_or(r.len());
        let name = r[..end].trim_end_matches('.');
        if name.is_empty() {
            return Err("empty name".into());
        }
        self.pos += name.len();
        Ok(name.to_string())
    }

    fn literal(&mut self) -> Result<String, String> {
        let mut out = String::new();
        let mut chars = self.rest().char_indices();
        while let Some((i, c)) = chars.next() {
            match c {
                '"' => {
                    self.pos += i + 1;
                    return Ok(out);
                }
                '\\' => {
                    let (_, e) = chars.next().ok_or("dangling escape")?;
                    match e {
                        't' => out.push('\t'),
                        'n' => out.push('\n'),
                        'r' => out.push('\r'),
                        'b' => out.push('\u{8}'),
                        'f' => out.push('\u{c}'),
                        '"' | '\'' | '\\' => out.push(e),
                        'u' | 'U' => {
                            let n = if e == 'u' { 4 } else { 8 };
                            let hex: String = (0..n).filter_map(|_| chars.next().map(|(_, h)| h)).collect();
                            let code = u32::from_str_radix(&hex, 16).map_err(|_| format!("bad escape \\{e}{hex}"))?;
                            out.push(char::from_u32(code).ok_or_else(|| format!("bad code point {code:#x}"))?);
                        }
                        other => return Err(format!("unknown escape \\{other}")),
                    }
                }
                c => out.push(c),
            }
        }
        Err("unterminated literal".into())
    }

    fn term(&mut self, allow_literal: bool) -> Result<Term, String> {
        self.skip_ws();
        if self.eat('<') {
            return self.iri().map(Term::Iri);
        }
        if self.rest().starts_with("_:") {
            self.pos += 2;
            return self.name().map(Term::Blank);
        }
        if allow_literal && self.eat('"') {
            let value = self.literal()?;
            let (mut lang, mut datatype) = (None, None);
            if self.eat('@') {
                lang = Some(self.name()?);
            } else if self.rest().starts_with("^^<") {
                self.pos += 3;
                datatype = Some(self.iri()?);
            }
            return Ok(Term::Literal { value, lang, datatype });
        }
        Err(format!("unexpected input {:?}", self.rest().chars().take(20).collect::<String>()))
    }
}

/// Parses N-Triples text. Errors carry the 1-based line number.
pub fn parse_ntriples(text: &str) -> Result<Vec<Triple>, String> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let mut c = Cursor { s: t, pos: 0 };
        let parsed = (|| {
            let subject = c.term(false)?;
            let predicate = match c.term(false)? {
                Term::Iri(p) => p,
                _ => return Err("predicate must be an IRI".to_string()),
            };
            let object = c.term(true)?;
            c.skip_ws();
            if !c.eat('.') {
                return Err("missing terminating '.'".into());
            }
            c.skip_ws();
            if !(c.rest().is_empty() || c.rest().starts_with('#')) {
                return Err("trailing input after '.'".into());
            }
            Ok(Triple {
                subject,
                predicate,
                object,
            })
        })();
        out.push(parsed.map_err(|e| format!("line {}: {e}", i + 1))?);
    }
    Ok(out)
}

impl Ingestor {
    /// One node per distinct term, one edge per triple labeled by the
    /// property IRI. Returns the subject nodes in first-seen order.
    pub fn ingest_rdf(&mut self, origin: &str, text: &str) -> Result<Vec<NodeId>, IngestError> {
        let triples = parse_ntriples(text).map_err(|e| IngestError::parse(origin, e))?;
        let source = self.open_source(DataModel::Rdf, origin)?;
        let rdf = ContextModel::Rdf;

        // subjects whose property set hits a skipAll rule
        let mut covered: HashMap<&Term, bool> = HashMap::new();
        for t in &triples {
            let hit = self.policy.has_skip_all() && self.policy.is_skip_all_target(rdf, &t.predicate);
            *covered.entry(&t.subject).or_default() |= hit;
        }

        let mut nodes: HashMap<&Term, NodeId> = HashMap::new();
        let mut subjects = Vec::new();
        let mut literal_actions: Vec<(NodeId, &str, Resolved)> = Vec::new();
        for t in &triples {
            for term in [&t.subject, &t.object] {
                if !nodes.contains_key(term) {
                    let n = match term {
                        Term::Literal { value, .. } => self.value_node(source, NodeType::RdfLiteral, value),
                        _ => self.structural(source, NodeType::RdfResource, &term.label()),
                    };
                    nodes.insert(term, n);
                }
            }
            let (s, o) = (nodes[&t.subject], nodes[&t.object]);
            if !subjects.contains(&s) {
                subjects.push(s);
            }
            if s != o {
                self.builder
                    .add_edge(s, o, EdgeType::Structure, t.predicate.as_str(), None)
                    .expect("fresh nodes");
            }
            if let Term::Literal { value, .. } = &t.object {
                let action = self.policy.action_for(rdf, &t.predicate, covered[&t.subject]);
                match literal_actions.iter_mut().find(|(n, _, _)| *n == o) {
                    Some(entry) => entry.2 = stronger(entry.2, action),
                    None => literal_actions.push((o, value, action)),
                }
            }
        }
        for (node, value, action) in literal_actions {
            self.extract(source, node, value, action);
        }
        Ok(subjects)
    }
}

/// Combines the outcomes of several triples reaching one literal.
fn stronger(a: Resolved, b: Resolved) -> Resolved {
    match (a, b) {
        (Resolved::Force(t), _) | (_, Resolved::Force(t)) => Resolved::Force(t),
        (Resolved::Skip, _) | (_, Resolved::Skip) => Resolved::Skip,
        _ => Resolved::Default,
    }
}
