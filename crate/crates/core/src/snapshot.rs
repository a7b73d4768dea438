//! Binary snapshot of a frozen [`Graph`].
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic    8 bytes  "GLNSNAP\0"
//! version  u32
//! count    u32      number of sections
//! section* tag [u8; 4], length u64, crc32 u32, payload
//! ```
//!
//! Sections appear in a fixed order: `MANI`, `STRS`, `SRCS`, `NODE`, `OVFL`,
//! `NMET`, `EDGE`, `EMET`, `KWDS`. Every string lives once in the UTF-8 string
//! table (`STRS`); other sections refer to it by index. The manifest carries
//! the format version, counts, `K`, creation parameters and a creation
//! timestamp, which is the only part that differs between two saves of the
//! same graph.
//!
//! Node ids are the dense ids of the saved graph. They are stable across a
//! save/load pair but a graph rebuilt from sources may number nodes
//! differently.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use thiserror::Error;

use crate::graph::{
    DataModel, EdgeId, EdgeMetadata, EdgeRecord, EdgeType, Graph, GraphError, KeywordIndex, NodeId, NodeMetadata,
    NodeRecord, NodeType, SourceId, SourceInfo,
};

pub const MAGIC: [u8; 8] = *b"GLNSNAP\0";
pub const FORMAT_VERSION: u32 = 1;

static TAGS: [[u8; 4]; 9] = [
    *b"MANI", *b"STRS", *b"SRCS", *b"NODE", *b"OVFL", *b"NMET", *b"EDGE", *b"EMET", *b"KWDS",
];
const SECTION_HEADER: usize = 4 + 8 + 4;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("not a graph snapshot (bad magic bytes)")]
    BadMagic,
    #[error("snapshot format version {found}, expected {expected}")]
    Version { found: u32, expected: u32 },
    #[error("snapshot truncated in {0}")]
    Truncated(String),
    #[error("checksum mismatch in section {0}")]
    Checksum(String),
    #[error("malformed snapshot: {0}")]
    Format(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Manifest {
    pub version: u32,
    pub k: u32,
    pub nodes: u64,
    pub edges: u64,
    pub sources: u64,
    /// Seconds since the Unix epoch.
    pub created: u64,
    pub params: BTreeMap<String, String>,
}

#[derive(Default)]
struct Strings {
    index: HashMap<String, u32>,
    table: Vec<String>,
}

impl Strings {
    fn id(&mut self, s: &str) -> u32 {
        if let Some(i) = self.index.get(s) {
            return *i;
        }
        let i = self.table.len() as u32;
        self.index.insert(s.to_owned(), i);
        self.table.push(s.to_owned());
        i
    }
}

#[derive(Default)]
struct Out(Vec<u8>);

impl Out {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn len(&mut self, v: usize) {
        self.u32(v as u32);
    }
    fn str(&mut self, s: &str) {
        self.len(s.len());
        self.0.extend_from_slice(s.as_bytes());
    }
}

/// Serializes `graph` with the given creation timestamp.
pub fn encode(graph: &Graph, created: u64) -> Vec<u8> {
    let mut strings = Strings::default();
    let mut sections: Vec<Out> = (0..TAGS.len()).map(|_| Out::default()).collect();

    let m = &mut sections[0];
    m.u32(FORMAT_VERSION);
    m.u32(graph.k as u32);
    m.u64(graph.nodes.len() as u64);
    m.u64(graph.edges.len() as u64);
    m.u64(graph.sources.len() as u64);
    m.u64(created);
    m.len(graph.params.len());
    for (k, v) in &graph.params {
        m.str(k);
        m.str(v);
    }

    let s = &mut sections[2];
    s.len(graph.sources.len());
    for src in &graph.sources {
        s.u32(src.id.0);
        s.u8(src.model.code());
        s.u32(strings.id(&src.origin));
    }

    let s = &mut sections[3];
    for (i, rec) in graph.nodes.iter().enumerate() {
        s.u32(rec.source.0);
        s.u32(rec.representative.0);
        s.u32(rec.overflow);
        s.u32(rec.meta);
        for e in &graph.slots[i * graph.k..(i + 1) * graph.k] {
            s.u32(e.0);
        }
    }

    let s = &mut sections[4];
    s.len(graph.overflow_offsets.len());
    for o in &graph.overflow_offsets {
        s.u32(*o);
    }
    s.len(graph.overflow_edges.len());
    for e in &graph.overflow_edges {
        s.u32(e.0);
    }

    let s = &mut sections[5];
    s.len(graph.node_meta.len());
    for meta in &graph.node_meta {
        s.u8(meta.node_type.code());
        s.u32(strings.id(&meta.label));
    }

    let s = &mut sections[6];
    for e in &graph.edges {
        s.u32(e.source.0);
        s.u32(e.target.0);
        s.f64(e.specificity);
        s.u32(e.meta);
    }

    let s = &mut sections[7];
    s.len(graph.edge_meta.len());
    for meta in &graph.edge_meta {
        s.u8(meta.edge_type.code());
        s.u32(strings.id(&meta.label));
        s.f64(meta.confidence);
    }

    let s = &mut sections[8];
    let entries = graph.keywords.sorted_entries();
    s.len(entries.len());
    for (tok, ids) in entries {
        s.u32(strings.id(tok));
        s.len(ids.len());
        for id in ids {
            s.u32(id.0);
        }
    }

    let s = &mut sections[1];
    s.len(strings.table.len());
    for st in &strings.table {
        s.str(st);
    }

    let mut out = Vec::with_capacity(16 + sections.iter().map(|s| s.0.len() + SECTION_HEADER).sum::<usize>());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(TAGS.len() as u32).to_le_bytes());
    for (tag, body) in TAGS.iter().zip(&sections) {
        out.extend_from_slice(tag);
        out.extend_from_slice(&(body.0.len() as u64).to_le_bytes());
        out.extend_from_slice(&crc32fast::hash(&body.0).to_le_bytes());
        out.extend_from_slice(&body.0);
    }
    out
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

pub fn save(graph: &Graph, path: impl AsRef<Path>) -> Result<(), SnapshotError> {
    let path = path.as_ref();
    std::fs::write(path, encode(graph, now())).map_err(|source| SnapshotError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load(path: impl AsRef<Path>) -> Result<Graph, SnapshotError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| SnapshotError::Io {
        path: path.display().to_string(),
        source,
    })?;
    decode(&bytes)
}

struct In<'a> {
    buf: &'a [u8],
    pos: usize,
    section: &'static str,
}

impl<'a> In<'a> {
    fn new(buf: &'a [u8], section: &'static str) -> Self {
        In { buf, pos: 0, section }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], SnapshotError> {
        if self.buf.len() - self.pos < n {
            return Err(SnapshotError::Truncated(self.section.to_owned()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, SnapshotError> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32, SnapshotError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, SnapshotError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64, SnapshotError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    /// A count whose items take at least `min_item` bytes each; rejects counts
    /// the remaining payload cannot hold before anything is allocated.
    fn count(&mut self, min_item: usize) -> Result<usize, SnapshotError> {
        let n = self.u32()? as usize;
        if n.saturating_mul(min_item) > self.buf.len() - self.pos {
            return Err(SnapshotError::Truncated(self.section.to_owned()));
        }
        Ok(n)
    }

    fn str(&mut self) -> Result<&'a str, SnapshotError> {
        let n = self.count(1)?;
        std::str::from_utf8(self.take(n)?).map_err(|_| SnapshotError::Format(format!("invalid UTF-8 in {}", self.section)))
    }

    fn finish(&self) -> Result<(), SnapshotError> {
        if self.pos != self.buf.len() {
            return Err(SnapshotError::Format(format!("trailing bytes in section {}", self.section)));
        }
        Ok(())
    }
}

fn sections(bytes: &[u8]) -> Result<Vec<&[u8]>, SnapshotError> {
    let mut r = In::new(bytes, "header");
    if bytes.len() < MAGIC.len() || bytes[..MAGIC.len()] != MAGIC {
        return Err(SnapshotError::BadMagic);
    }
    r.take(MAGIC.len())?;
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(SnapshotError::Version {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let count = r.u32()? as usize;
    if count != TAGS.len() {
        return Err(SnapshotError::Format(format!("expected {} sections, found {count}", TAGS.len())));
    }
    let mut out = Vec::with_capacity(count);
    for expected in &TAGS {
        let name = std::str::from_utf8(expected).unwrap();
        let mut h = In::new(&bytes[r.pos..], name);
        let tag: [u8; 4] = h.take(4)?.try_into().unwrap();
        if tag != *expected {
            return Err(SnapshotError::Format(format!("expected section {name}, found {}", String::from_utf8_lossy(&tag))));
        }
        let len = h.u64()?;
        let crc = h.u32()?;
        let body = h.take(usize::try_from(len).map_err(|_| SnapshotError::Truncated(name.into()))?)?;
        if crc32fast::hash(body) != crc {
            return Err(SnapshotError::Checksum(name.into()));
        }
        r.pos += h.pos;
        out.push(body);
    }
    r.finish()?;
    Ok(out)
}

fn read_manifest_section(body: &[u8]) -> Result<Manifest, SnapshotError> {
    let mut r = In::new(body, "MANI");
    let mut m = Manifest {
        version: r.u32()?,
        k: r.u32()?,
        nodes: r.u64()?,
        edges: r.u64()?,
        sources: r.u64()?,
        created: r.u64()?,
        params: BTreeMap::new(),
    };
    for _ in 0..r.count(8)? {
        let k = r.str()?.to_owned();
        let v = r.str()?.to_owned();
        m.params.insert(k, v);
    }
    r.finish()?;
    Ok(m)
}

/// Reads and checks only the manifest.
pub fn read_manifest(bytes: &[u8]) -> Result<Manifest, SnapshotError> {
    read_manifest_section(sections(bytes)?[0])
}

/// Parses a snapshot and checks cross-table consistency.
pub fn decode(bytes: &[u8]) -> Result<Graph, SnapshotError> {
    let sec = sections(bytes)?;
    let manifest = read_manifest_section(sec[0])?;
    let bad = |m: String| SnapshotError::Format(m);
    if manifest.version != FORMAT_VERSION {
        return Err(bad("manifest version disagrees with header".into()));
    }
    let k = manifest.k as usize;
    if k == 0 {
        return Err(bad("zero neighbor slots".into()));
    }

    let mut r = In::new(sec[1], "STRS");
    let count = r.count(4)?;
    let mut strings = Vec::with_capacity(count);
    for _ in 0..count {
        strings.push(r.str()?);
    }
    r.finish()?;
    let string = |i: u32| -> Result<String, SnapshotError> {
        strings
            .get(i as usize)
            .map(|s| (*s).to_owned())
            .ok_or_else(|| SnapshotError::Format(format!("string index {i} out of range")))
    };

    let mut r = In::new(sec[2], "SRCS");
    let mut sources = Vec::new();
    for _ in 0..r.count(9)? {
        let id = SourceId(r.u32()?);
        let code = r.u8()?;
        let model = DataModel::from_code(code).ok_or_else(|| bad(format!("unknown data model {code}")))?;
        sources.push(SourceInfo {
            id,
            model,
            origin: string(r.u32()?)?,
        });
    }
    r.finish()?;
    if sources.len() as u64 != manifest.sources || sources.iter().enumerate().any(|(i, s)| s.id.index() != i) {
        return Err(bad("source table disagrees with manifest".into()));
    }

    let row = 4 * (4 + k);
    let n = usize::try_from(manifest.nodes).map_err(|_| bad("node count".into()))?;
    if sec[3].len() != n.saturating_mul(row) {
        return Err(bad("node table size disagrees with manifest".into()));
    }
    let mut r = In::new(sec[3], "NODE");
    let mut nodes = Vec::with_capacity(n);
    let mut slots = Vec::with_capacity(n * k);
    for _ in 0..n {
        nodes.push(NodeRecord {
            source: SourceId(r.u32()?),
            representative: NodeId(r.u32()?),
            overflow: r.u32()?,
            meta: r.u32()?,
        });
        for _ in 0..k {
            slots.push(EdgeId(r.u32()?));
        }
    }
    r.finish()?;

    let mut r = In::new(sec[4], "OVFL");
    let mut overflow_offsets = Vec::new();
    for _ in 0..r.count(4)? {
        overflow_offsets.push(r.u32()?);
    }
    let mut overflow_edges = Vec::new();
    for _ in 0..r.count(4)? {
        overflow_edges.push(EdgeId(r.u32()?));
    }
    r.finish()?;

    let mut r = In::new(sec[5], "NMET");
    let mut node_meta = Vec::new();
    for _ in 0..r.count(5)? {
        let code = r.u8()?;
        let node_type = NodeType::from_code(code).ok_or_else(|| bad(format!("unknown node type {code}")))?;
        node_meta.push(NodeMetadata {
            node_type,
            label: string(r.u32()?)?,
        });
    }
    r.finish()?;

    let m = usize::try_from(manifest.edges).map_err(|_| bad("edge count".into()))?;
    if sec[6].len() != m.saturating_mul(20) {
        return Err(bad("edge table size disagrees with manifest".into()));
    }
    let mut r = In::new(sec[6], "EDGE");
    let mut edges = Vec::with_capacity(m);
    for _ in 0..m {
        edges.push(EdgeRecord {
            source: NodeId(r.u32()?),
            target: NodeId(r.u32()?),
            specificity: r.f64()?,
            meta: r.u32()?,
        });
    }
    r.finish()?;

    let mut r = In::new(sec[7], "EMET");
    let mut edge_meta = Vec::new();
    for _ in 0..r.count(13)? {
        let code = r.u8()?;
        let edge_type = EdgeType::from_code(code).ok_or_else(|| bad(format!("unknown edge type {code}")))?;
        edge_meta.push(EdgeMetadata {
            edge_type,
            label: string(r.u32()?)?,
            confidence: r.f64()?,
        });
    }
    r.finish()?;

    let mut r = In::new(sec[8], "KWDS");
    let mut entries = HashMap::new();
    for _ in 0..r.count(8)? {
        let tok = string(r.u32()?)?;
        let mut ids = Vec::new();
        for _ in 0..r.count(4)? {
            ids.push(NodeId(r.u32()?));
        }
        if ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(bad(format!("unsorted posting list for {tok:?}")));
        }
        if entries.insert(tok, ids).is_some() {
            return Err(bad("duplicate keyword token".into()));
        }
    }
    r.finish()?;

    let graph = Graph::assemble(
        k,
        sources,
        nodes,
        slots,
        overflow_offsets,
        overflow_edges,
        node_meta,
        edges,
        edge_meta,
        KeywordIndex::from_entries(entries),
        manifest.params,
    );
    graph.validate()?;
    Ok(graph)
}
