//! In-memory graph storage.
//!
//! A [`GraphBuilder`] accumulates nodes and edges during ingestion. Calling
//! [`GraphBuilder::freeze`] lays the data out in fixed-size node rows with `K`
//! static adjacency slots, a separate overflow heap for high-degree nodes,
//! metadata tables kept apart from the search-critical tables, per-edge
//! specificity and a token index over node labels. The resulting [`Graph`] is
//! immutable and shared read-only by search workers.

mod builder;
mod keyword;
mod store;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use builder::{GraphBuilder, GraphConfig};
pub use keyword::KeywordIndex;
pub use store::{Direction, EdgeRecord, Graph, GraphCounts, Neighbor, NodeRecord};

/// Default number of static adjacency slots per node row.
pub const DEFAULT_NEIGHBOR_SLOTS: usize = 5;

macro_rules! dense_id {
    ($name:ident) => {
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl $name {
            /// Sentinel for an empty slot or missing reference.
            pub const NONE: $name = $name(u32::MAX);

            pub fn index(self) -> usize {
                self.0 as usize
            }

            pub fn is_none(self) -> bool {
                self.0 == u32::MAX
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                self.0.fmt(f)
            }
        }
    };
}

dense_id!(NodeId);
dense_id!(EdgeId);
dense_id!(SourceId);

/// Data model of an ingested source.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DataModel {
    Xml,
    Json,
    Html,
    Rdf,
    Rel,
    /// Generated benchmark graphs.
    Synthetic,
}

impl DataModel {
    pub fn code(self) -> u8 {
        match self {
            DataModel::Xml => 0,
            DataModel::Json => 1,
            DataModel::Html => 2,
            DataModel::Rdf => 3,
            DataModel::Rel => 4,
            DataModel::Synthetic => 5,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0 => DataModel::Xml,
            1 => DataModel::Json,
            2 => DataModel::Html,
            3 => DataModel::Rdf,
            4 => DataModel::Rel,
            5 => DataModel::Synthetic,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            DataModel::Xml => "xml",
            DataModel::Json => "json",
            DataModel::Html => "html",
            DataModel::Rdf => "rdf",
            DataModel::Rel => "rel",
            DataModel::Synthetic => "synthetic",
        }
    }
}

/// A registered data source.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceInfo {
    pub id: SourceId,
    pub model: DataModel,
    pub origin: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeType {
    XmlElement,
    XmlText,
    JsonObject,
    JsonArray,
    JsonValue,
    Html,
    RdfResource,
    RdfLiteral,
    RelRow,
    RelValue,
    EntityPerson,
    EntityOrganization,
    EntityLocation,
    Uri,
}

impl NodeType {
    const ALL: [NodeType; 14] = [
        NodeType::XmlElement,
        NodeType::XmlText,
        NodeType::JsonObject,
        NodeType::JsonArray,
        NodeType::JsonValue,
        NodeType::Html,
        NodeType::RdfResource,
        NodeType::RdfLiteral,
        NodeType::RelRow,
        NodeType::RelValue,
        NodeType::EntityPerson,
        NodeType::EntityOrganization,
        NodeType::EntityLocation,
        NodeType::Uri,
    ];

    pub fn code(self) -> u8 {
        Self::ALL.iter().position(|t| *t == self).unwrap() as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            NodeType::XmlElement => "XML-element",
            NodeType::XmlText => "XML-text",
            NodeType::JsonObject => "JSON-object",
            NodeType::JsonArray => "JSON-array",
            NodeType::JsonValue => "JSON-value",
            NodeType::Html => "HTML",
            NodeType::RdfResource => "RDF-resource",
            NodeType::RdfLiteral => "RDF-literal",
            NodeType::RelRow => "REL-row",
            NodeType::RelValue => "REL-value",
            NodeType::EntityPerson => "Entity-Person",
            NodeType::EntityOrganization => "Entity-Organization",
            NodeType::EntityLocation => "Entity-Location",
            NodeType::Uri => "URI",
        }
    }

    pub fn is_entity(self) -> bool {
        matches!(
            self,
            NodeType::EntityPerson | NodeType::EntityOrganization | NodeType::EntityLocation
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeType {
    Structure,
    Extraction,
    SameAs,
    Equivalence,
}

impl EdgeType {
    pub fn code(self) -> u8 {
        match self {
            EdgeType::Structure => 0,
            EdgeType::Extraction => 1,
            EdgeType::SameAs => 2,
            EdgeType::Equivalence => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0 => EdgeType::Structure,
            1 => EdgeType::Extraction,
            2 => EdgeType::SameAs,
            3 => EdgeType::Equivalence,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            EdgeType::Structure => "structure",
            EdgeType::Extraction => "extraction",
            EdgeType::SameAs => "sameAs",
            EdgeType::Equivalence => "equivalence",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeMetadata {
    pub node_type: NodeType,
    /// Source-derived label, never rewritten by normalization.
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeMetadata {
    pub edge_type: EdgeType,
    pub label: String,
    pub confidence: f64,
}

/// Label used on sameAs and equivalence edges.
pub fn similarity_label(value: f64) -> String {
    format!("{value:.2}")
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GraphError {
    #[error("graph is frozen; no further mutation is allowed")]
    Frozen,
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("unknown source {0}")]
    UnknownSource(SourceId),
    #[error("self-loop on node {0} rejected")]
    SelfLoop(NodeId),
    #[error("confidence {0} outside (0, 1]")]
    Confidence(f64),
    #[error("equivalence edges are derived from representatives; use set_representative")]
    ExplicitEquivalence,
    #[error("representative assignment {member} -> {rep} would create a cycle")]
    RepresentativeCycle { member: NodeId, rep: NodeId },
    #[error("inconsistent graph tables: {0}")]
    Corrupt(String),
}
