//! Extraction policies: per-context rules that force, skip or widely skip
//! entity extraction.
//!
//! One rule per line, `[model:]<context> (force <Type> | skip | skipAll)`,
//! with `#` starting a comment when it begins the line or follows
//! whitespace. `model` is `hierarchical`, `relational` or `rdf`; without it
//! a rule applies wherever its context occurs.
//!
//! ```
//! use graphlens::policy::{ContextModel, Policy, Resolved};
//! use graphlens::ingest::EntityType;
//!
//! let p = Policy::parse("PubmedArticle.Author.Name force Person\nR.a skip").unwrap();
//! let m = ContextModel::Hierarchical;
//! assert_eq!(p.resolve(m, "PubmedArticle.Author.Name"), Resolved::Force(EntityType::Person));
//! assert_eq!(p.resolve(ContextModel::Relational, "R.a"), Resolved::Skip);
//! ```

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::graph::DataModel;
use crate::ingest::EntityType;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ContextModel {
    Hierarchical,
    Relational,
    Rdf,
}

impl ContextModel {
    pub fn of(model: DataModel) -> Option<ContextModel> {
        match model {
            DataModel::Xml | DataModel::Json | DataModel::Html => Some(ContextModel::Hierarchical),
            DataModel::Rel => Some(ContextModel::Relational),
            DataModel::Rdf => Some(ContextModel::Rdf),
            DataModel::Synthetic => None,
        }
    }

    fn parse(s: &str) -> Option<ContextModel> {
        match s.to_ascii_lowercase().as_str() {
            "hierarchical" => Some(ContextModel::Hierarchical),
            "relational" => Some(ContextModel::Relational),
            "rdf" => Some(ContextModel::Rdf),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ContextModel::Hierarchical => "hierarchical",
            ContextModel::Relational => "relational",
            ContextModel::Rdf => "rdf",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Context {
    /// `None` matches in every model.
    pub model: Option<ContextModel>,
    pub path: String,
}

impl Context {
    fn applies_to(&self, model: ContextModel) -> bool {
        self.model.is_none_or(|m| m == model)
    }

    /// Whether this context designates nodes at `path`. RDF contexts also
    /// match on the property's local name.
    fn designates(&self, model: ContextModel, path: &str) -> bool {
        self.applies_to(model) && (self.path == path || (model == ContextModel::Rdf && local_name(path) == self.path))
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.model {
            Some(m) => write!(f, "{}:{}", m.name(), self.path),
            None => f.write_str(&self.path),
        }
    }
}

/// Local name of an IRI: the part after the last `#` or `/`.
pub fn local_name(iri: &str) -> &str {
    iri.rsplit(['#', '/']).next().unwrap_or(iri)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Force(EntityType),
    Skip,
    SkipAll,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyRule {
    pub context: Context,
    pub action: Action,
    pub line: usize,
}

/// Outcome for one text node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resolved {
    Default,
    Skip,
    Force(EntityType),
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("policy line {line}: {message}")]
pub struct PolicyError {
    pub line: usize,
    pub message: String,
}

/// Compiled rule set.
#[derive(Debug, Clone, Default)]
pub struct Policy {
    rules: Vec<PolicyRule>,
    force: HashMap<String, Vec<(Option<ContextModel>, EntityType)>>,
}

impl Policy {
    pub fn new(rules: Vec<PolicyRule>) -> Policy {
        let mut force: HashMap<String, Vec<_>> = HashMap::new();
        for r in &rules {
            if let Action::Force(t) = r.action {
                force.entry(r.context.path.clone()).or_default().push((r.context.model, t));
            }
        }
        Policy { rules, force }
    }

    pub fn parse(text: &str) -> Result<Policy, PolicyError> {
        parse_rules(text).map(Policy::new)
    }

    pub fn rules(&self) -> &[PolicyRule] {
        &self.rules
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    fn forced(&self, model: ContextModel, path: &str) -> Option<EntityType> {
        let lookup = |key: &str| {
            self.force
                .get(key)
                .and_then(|v| v.iter().find(|(m, _)| m.is_none_or(|m| m == model)))
                .map(|(_, t)| *t)
        };
        lookup(path).or_else(|| if model == ContextModel::Rdf { lookup(local_name(path)) } else { None })
    }

    fn skipped(&self, model: ContextModel, path: &str) -> bool {
        self.rules
            .iter()
            .any(|r| r.action == Action::Skip && r.context.designates(model, path))
    }

    /// Whether `path` is designated by a skipAll rule. Mappers use this to
    /// find the parent instances whose descendants are covered.
    pub fn is_skip_all_target(&self, model: ContextModel, path: &str) -> bool {
        self.rules
            .iter()
            .any(|r| r.action == Action::SkipAll && r.context.designates(model, path))
    }

    pub fn has_skip_all(&self) -> bool {
        self.rules.iter().any(|r| r.action == Action::SkipAll)
    }

    /// Action for a node at `path`, given whether a skipAll rule covers the
    /// node's instance. Precedence: force, skipAll, skip, default.
    pub fn action_for(&self, model: ContextModel, path: &str, under_skip_all: bool) -> Resolved {
        if let Some(t) = self.forced(model, path) {
            Resolved::Force(t)
        } else if under_skip_all || self.skipped(model, path) {
            Resolved::Skip
        } else {
            Resolved::Default
        }
    }

    /// Path-level resolution. A skipAll rule on `A.B.C` covers every path
    /// under `A.B`, as if every `A.B` instance held a `C`. For RDF, where
    /// contexts have no parent path, skipAll acts as skip here.
    pub fn resolve(&self, model: ContextModel, path: &str) -> Resolved {
        let covered = self.rules.iter().any(|r| {
            r.action == Action::SkipAll
                && r.context.applies_to(model)
                && match model {
                    ContextModel::Rdf => r.context.designates(model, path),
                    _ => match r.context.path.rsplit_once('.') {
                        Some((parent, _)) => path.strip_prefix(parent).is_some_and(|rest| rest.starts_with('.')),
                        None => true,
                    },
                }
        });
        self.action_for(model, path, covered)
    }
}

// `#` opens a comment at line start or after whitespace; IRI fragments stay.
fn strip_comment(line: &str) -> &str {
    let mut prev_ws = true;
    for (i, c) in line.char_indices() {
        if c == '#' && prev_ws {
            return &line[..i];
        }
        prev_ws = c.is_whitespace();
    }
    line
}

/// Parses policy text into rules, one per non-comment line.
pub fn parse_rules(text: &str) -> Result<Vec<PolicyRule>, PolicyError> {
    let mut rules = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = strip_comment(raw).trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| PolicyError { line, message };
        let words: Vec<&str> = content.split_whitespace().collect();
        let (ctx, action) = match words.as_slice() {
            [ctx, a] if a.eq_ignore_ascii_case("skip") => (*ctx, Action::Skip),
            [ctx, a] if a.eq_ignore_ascii_case("skipall") => (*ctx, Action::SkipAll),
            [ctx, a, t] if a.eq_ignore_ascii_case("force") => {
                let ty = EntityType::parse(t).ok_or_else(|| err(format!("unknown entity type {t:?}")))?;
                (*ctx, Action::Force(ty))
            }
            [_, a, ..] if !["skip", "skipall", "force"].contains(&a.to_ascii_lowercase().as_str()) => {
                return Err(err(format!("unknown action {a:?}")))
            }
            _ => return Err(err(format!("expected `<context> (force <Type> | skip | skipAll)`, got {content:?}"))),
        };
        let context = match ctx.split_once(':') {
            Some((m, path)) if ContextModel::parse(m).is_some() => Context {
                model: ContextModel::parse(m),
                path: path.to_string(),
            },
            _ => Context {
                model: None,
                path: ctx.to_string(),
            },
        };
        if context.path.is_empty() {
            return Err(err("empty context".into()));
        }
        rules.push(PolicyRule { context, action, line });
    }
    Ok(rules)
}
