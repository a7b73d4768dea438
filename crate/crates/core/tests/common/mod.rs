#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use graphlens::ingest::{
    DefaultExtractor, ExtractError, ExtractedEntity, Extractor, Ingestor, SimilarityConfig,
};
use graphlens::policy::Policy;

pub fn toy_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/toy")
}

pub const TOY_FILES: [&str; 4] = ["notice.xml", "paper.json", "kb.nt", "pharmaleaks.html"];

pub fn toy_extractor() -> DefaultExtractor {
    let mut x = DefaultExtractor::new();
    let gaz = std::fs::read_to_string(toy_dir().join("gazetteer.txt")).unwrap();
    x.load_typed_gazetteer(&gaz).unwrap();
    x
}

/// Ingests the four toy sources and runs the similarity pass.
pub fn toy_ingestor(with_policy: bool) -> Ingestor {
    let mut ing = Ingestor::new(toy_extractor());
    if with_policy {
        let pol = std::fs::read_to_string(toy_dir().join("policy.pol")).unwrap();
        ing.set_policy(Policy::parse(&pol).unwrap());
    }
    for f in TOY_FILES {
        ing.ingest_file(&toy_dir().join(f)).unwrap();
    }
    ing.link_similar(SimilarityConfig::default()).unwrap();
    ing
}

/// Wraps an extractor and records every text it is asked about.
#[derive(Clone)]
pub struct Recording<E> {
    pub inner: E,
    pub calls: Arc<Mutex<Vec<String>>>,
}

impl<E: Extractor> Recording<E> {
    pub fn new(inner: E) -> Self {
        Recording {
            inner,
            calls: Arc::default(),
        }
    }
}

impl<E: Extractor> Extractor for Recording<E> {
    fn extract(&self, text: &str) -> Result<Vec<ExtractedEntity>, ExtractError> {
        self.calls.lock().unwrap().push(text.to_owned());
        self.inner.extract(text)
    }
}
