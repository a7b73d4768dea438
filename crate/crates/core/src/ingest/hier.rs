//! XML, HTML and JSON mappers.

use scraper::{ElementRef, Html};
use serde_json::Value;

use super::{IngestError, Ingestor};
use crate::graph::{DataModel, EdgeType, NodeId, NodeType, SourceId};
use crate::policy::ContextModel;

const H: ContextModel = ContextModel::Hierarchical;
const HTML_DROPPED: &[&str] = &["script", "style", "noscript", "template"];

struct Element {
    tag: String,
    attrs: Vec<(String, String)>,
    children: Vec<Child>,
}

enum Child {
    Element(Element),
    Text(String),
}

fn from_xml(node: roxmltree::Node<'_, '_>) -> Element {
    Element {
        tag: node.tag_name().name().to_string(),
        attrs: node
            .attributes()
            .map(|a| (a.name().to_string(), a.value().to_string()))
            .collect(),
        children: node
            .children()
            .filter_map(|c| {
                if c.is_element() {
                    Some(Child::Element(from_xml(c)))
                } else if c.is_text() {
                    c.text()
                        .filter(|t| !t.trim().is_empty())
                        .map(|t| Child::Text(t.to_string()))
                } else {
                    None
                }
            })
            .collect(),
    }
}

fn from_html(el: ElementRef<'_>) -> Element {
    Element {
        tag: el.value().name().to_string(),
        attrs: el.value().attrs().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        children: el
            .children()
            .filter_map(|c| {
                if let Some(child) = ElementRef::wrap(c) {
                    (!HTML_DROPPED.contains(&child.value().name())).then(|| Child::Element(from_html(child)))
                } else if let scraper::Node::Text(t) = c.value() {
                    (!t.trim().is_empty()).then(|| Child::Text(t.to_string()))
                } else {
                    None
                }
            })
            .collect(),
    }
}

fn join(path: &str, name: &str) -> String {
    if path.is_empty() {
        name.to_string()
    } else {
        format!("{path}.{name}")
    }
}

impl Ingestor {
    /// Elements become nodes labeled by tag; attributes become `@name`
    /// nodes with a value child; text becomes leaves. Edges are unlabeled.
    pub fn ingest_xml(&mut self, origin: &str, text: &str) -> Result<Vec<NodeId>, IngestError> {
        let opts = roxmltree::ParsingOptions {
            allow_dtd: true,
            ..Default::default()
        };
        let doc = roxmltree::Document::parse_with_options(text, opts).map_err(|e| IngestError::parse(origin, e))?;
        let root = from_xml(doc.root_element());
        let source = self.open_source(DataModel::Xml, origin)?;
        let types = (NodeType::XmlElement, NodeType::XmlText);
        Ok(vec![self.map_element(source, types, &root, None, "", false)])
    }

    /// Parsed leniently into a DOM and mapped like XML; scripts and styles
    /// are dropped.
    pub fn ingest_html(&mut self, origin: &str, text: &str) -> Result<Vec<NodeId>, IngestError> {
        let doc = Html::parse_document(text);
        let root = from_html(doc.root_element());
        let source = self.open_source(DataModel::Html, origin)?;
        let types = (NodeType::Html, NodeType::Html);
        Ok(vec![self.map_element(source, types, &root, None, "", false)])
    }

    fn map_element(
        &mut self,
        source: SourceId,
        types: (NodeType, NodeType),
        el: &Element,
        parent: Option<NodeId>,
        parent_path: &str,
        inherited: bool,
    ) -> NodeId {
        let (elem_type, text_type) = types;
        let node = self.structural(source, elem_type, &el.tag);
        if let Some(p) = parent {
            self.builder.add_edge(p, node, EdgeType::Structure, "", None).expect("fresh nodes");
        }
        let path = join(parent_path, &el.tag);
        let scope = inherited
            || (self.policy.has_skip_all()
                && (el.children.iter().any(|c| match c {
                    Child::Element(e) => self.policy.is_skip_all_target(H, &join(&path, &e.tag)),
                    Child::Text(_) => false,
                }) || el
                    .attrs
                    .iter()
                    .any(|(k, _)| self.policy.is_skip_all_target(H, &join(&path, &format!("@{k}"))))));
        for (k, v) in &el.attrs {
            let label = format!("@{k}");
            let attr = self.structural(source, elem_type, &label);
            self.builder.add_edge(node, attr, EdgeType::Structure, "", None).expect("fresh nodes");
            self.text_leaf(source, text_type, attr, "", v, H, &join(&path, &label), scope);
        }
        for c in &el.children {
            match c {
                Child::Element(e) => {
                    self.map_element(source, types, e, Some(node), &path, scope);
                }
                Child::Text(t) => {
                    self.text_leaf(source, text_type, node, "", t, H, &path, scope);
                }
            }
        }
        node
    }

    /// Objects and arrays become unlabeled nodes; keys and array positions
    /// label the edges to their values; scalars become leaves. Contexts are
    /// key paths with array positions left out.
    pub fn ingest_json(&mut self, origin: &str, text: &str) -> Result<Vec<NodeId>, IngestError> {
        let value: Value = serde_json::from_str(text).map_err(|e| IngestError::parse(origin, e))?;
        let source = self.open_source(DataModel::Json, origin)?;
        Ok(vec![self.map_json(source, &value, None, "", false)])
    }

    fn map_json(&mut self, source: SourceId, v: &Value, parent: Option<(NodeId, &str)>, path: &str, scope: bool) -> NodeId {
        let attach = |ing: &mut Ingestor, n: NodeId| {
            if let Some((p, label)) = parent {
                ing.builder.add_edge(p, n, EdgeType::Structure, label, None).expect("fresh nodes");
            }
        };
        match v {
            Value::Object(map) => {
                let node = self.structural(source, NodeType::JsonObject, "");
                attach(self, node);
                let scope = scope
                    || (self.policy.has_skip_all() && map.keys().any(|k| self.policy.is_skip_all_target(H, &join(path, k))));
                for (k, child) in map {
                    self.map_json(source, child, Some((node, k)), &join(path, k), scope);
                }
                node
            }
            Value::Array(items) => {
                let node = self.structural(source, NodeType::JsonArray, "");
                attach(self, node);
                for (i, child) in items.iter().enumerate() {
                    self.map_json(source, child, Some((node, &i.to_string())), path, scope);
                }
                node
            }
            Value::String(s) => match parent {
                Some((p, label)) => self.text_leaf(source, NodeType::JsonValue, p, label, s, H, path, scope),
                None => {
                    let n = self.value_node(source, NodeType::JsonValue, s);
                    let action = self.policy.action_for(H, path, scope);
                    self.extract(source, n, s, action);
                    n
                }
            },
            other => {
                let n = self.value_node(source, NodeType::JsonValue, &other.to_string());
                attach(self, n);
                n
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{DefaultExtractor, EntityType};
    use crate::policy::Policy;

    fn plain() -> Ingestor {
        Ingestor::new(DefaultExtractor::new().without_patterns())
    }

    #[test]
    fn xml_element_and_text() {
        let mut ing = plain();
        let roots = ing.ingest_xml("a.xml", "<Name>Alice</Name>").unwrap();
        let g = ing.freeze();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.label(roots[0]), "Name");
        let e = g.edge(crate::graph::EdgeId(0));
        assert_eq!((e.source, g.label(e.target)), (roots[0], "Alice"));
        assert_eq!(g.edge_meta(crate::graph::EdgeId(0)).label, "");
        assert_eq!(g.node_meta(e.target).node_type, NodeType::XmlText);
    }

    #[test]
    fn xml_attributes_get_value_children() {
        let mut ing = plain();
        ing.ingest_xml("a.xml", r#"<?xml version="1.0"?><!DOCTYPE A><A id="7"><B>x</B></A>"#).unwrap();
        let g = ing.freeze();
        let labels: Vec<&str> = g.node_ids().map(|n| g.label(n)).collect();
        assert_eq!(labels, vec!["A", "@id", "7", "B", "x"]);
    }

    #[test]
    fn xml_parse_error_leaves_builder_untouched() {
        let mut ing = plain();
        let err = ing.ingest_xml("bad.xml", "<a><b></a>").unwrap_err();
        assert!(err.to_string().starts_with("bad.xml:"));
        assert_eq!(ing.builder().node_count(), 0);
        assert!(ing.builder().sources().is_empty());
    }

    #[test]
    fn json_keys_label_edges() {
        let mut ing = plain();
        let roots = ing.ingest_json("p.json", r#"{"affiliation":"HealthStar","tags":["a",2]}"#).unwrap();
        let g = ing.freeze();
        assert_eq!(g.label(roots[0]), "");
        assert_eq!(g.node_meta(roots[0]).node_type, NodeType::JsonObject);
        let edges: Vec<(String, String)> = g
            .edge_ids()
            .map(|e| (g.edge_meta(e).label.clone(), g.label(g.edge(e).target).to_string()))
            .collect();
        assert_eq!(
            edges,
            vec![
                ("affiliation".into(), "HealthStar".into()),
                ("tags".into(), "".into()),
                ("0".into(), "a".into()),
                ("1".into(), "2".into()),
            ]
        );
    }

    #[test]
    fn html_drops_scripts() {
        let mut ing = plain();
        ing.ingest_html("p.html", "<html><head><title>T</title><style>p{}</style></head><body><p>Hello <b>there</b></p><script>var x;</script></body></html>")
            .unwrap();
        let g = ing.freeze();
        let labels: Vec<&str> = g.node_ids().map(|n| g.label(n)).collect();
        assert_eq!(labels, vec!["html", "head", "title", "T", "body", "p", "Hello ", "b", "there"]);
    }

    #[test]
    fn skip_all_applies_per_instance() {
        // only the Author holding a Note is covered
        let xml = "<A><Author><Name>Bob Stone</Name><Note>n</Note></Author><Author><Name>Carl Stone</Name></Author></A>";
        let mut ing = Ingestor::new(DefaultExtractor::new());
        ing.set_policy(Policy::parse("A.Author.Note skipAll").unwrap());
        ing.ingest_xml("a.xml", xml).unwrap();
        assert_eq!(ing.counters().skipped_nodes, 2);
        assert_eq!(ing.counters().extractor_calls, 1);
        assert!(ing.entity(EntityType::Person, "Carl Stone").is_some());
        assert!(ing.entity(EntityType::Person, "Bob Stone").is_none());
    }

    #[test]
    fn json_skip_all_inside_arrays() {
        let json = r#"{"authors":[{"name":"Bob Stone","ack":"x"},{"name":"Carl Stone"}]}"#;
        let mut ing = Ingestor::new(DefaultExtractor::new());
        ing.set_policy(Policy::parse("authors.ack skipAll").unwrap());
        ing.ingest_json("a.json", json).unwrap();
        assert_eq!(ing.counters().skipped_nodes, 2);
        assert_eq!(ing.counters().extractor_calls, 1);
    }
}
