use std::collections::HashMap;

use super::NodeId;
use crate::text;

/// Token to node-set map over node labels.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct KeywordIndex {
    entries: HashMap<String, Vec<NodeId>>,
}

impl KeywordIndex {
    /// Indexes labels in node-id order; posting lists come out sorted.
    pub fn build<'a>(labels: impl IntoIterator<Item = &'a str>) -> Self {
        let mut entries: HashMap<String, Vec<NodeId>> = HashMap::new();
        for (i, label) in labels.into_iter().enumerate() {
            let id = NodeId(i as u32);
            for tok in text::tokens(label) {
                let list = entries.entry(tok).or_default();
                if list.last() != Some(&id) {
                    list.push(id);
                }
            }
        }
        KeywordIndex { entries }
    }

    pub(crate) fn from_entries(entries: HashMap<String, Vec<NodeId>>) -> Self {
        KeywordIndex { entries }
    }

    /// Nodes whose label contains `token`. The argument must already be
    /// normalized; see [`crate::text::keyword`].
    pub fn get(&self, token: &str) -> &[NodeId] {
        self.entries.get(token).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries sorted by token, for deterministic serialization.
    pub fn sorted_entries(&self) -> Vec<(&str, &[NodeId])> {
        let mut v: Vec<_> = self
            .entries
            .iter()
            .map(|(k, ids)| (k.as_str(), ids.as_slice()))
            .collect();
        v.sort_unstable_by(|a, b| a.0.cmp(b.0));
        v
    }
}
