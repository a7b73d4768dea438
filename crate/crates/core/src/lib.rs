//! Heterogeneous graph integration and parallel keyword search.
//!
//! - [`graph`]: frozen in-memory layout, specificity, keyword index.
//! - [`ingest`]: XML/JSON/HTML/RDF/CSV mappers, entity extraction, similarity links.
//! - [`policy`]: force/skip/skipAll extraction policies over contexts.
//! - [`search`]: parallel Grow/Merge enumeration of minimal answer trees.
//! - [`synth`]: chain and star generators, brute-force oracle, benchmarks.
//! - [`snapshot`]: versioned binary on-disk format.

pub mod graph;
pub mod ingest;
pub mod policy;
pub mod search;
pub mod snapshot;
pub mod synth;
pub mod text;
