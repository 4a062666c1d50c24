//! Opponent-specific pools of validated reasoning examples, and the
//! retrieval used to ground each structural-equation step.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::types::Value;

/// Which structural relation an example instantiates: the parent label set
/// and the child label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetLink {
    pub parents: BTreeSet<String>,
    pub child: String,
}

/// One validated reasoning event: parent values, the inferred child value,
/// the reasoning text, and the link it instantiates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReasoningExample {
    pub parent_values: BTreeMap<String, Value>,
    pub child_value: Value,
    pub reasoning: String,
    pub target_link: TargetLink,
}

impl ReasoningExample {
    /// Canonical text form of the parent values, for similarity queries.
    pub fn parents_text(&self) -> String {
        render_values(&self.parent_values)
    }
}

/// `key: value` form on purpose: example renderings inside prompts must not
/// look like the `key = value` parent lines scripted rules match against.
pub fn render_values(values: &BTreeMap<String, Value>) -> String {
    values
        .iter()
        .map(|(k, v)| format!("{k}: {v}"))
        .collect::<Vec<_>>()
        .join("; ")
}

/// Append-only (within an episode) store of examples for one opponent.
/// Entries are added only by credit assignment; a full pool evicts oldest
/// first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExamplePool {
    pub opponent: String,
    entries: Vec<(u64, ReasoningExample)>,
    next_id: u64,
    pub capacity: Option<usize>,
}

impl ExamplePool {
    pub fn new(opponent: impl Into<String>, capacity: Option<usize>) -> Self {
        ExamplePool {
            opponent: opponent.into(),
            entries: Vec::new(),
            next_id: 0,
            capacity,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (u64, &ReasoningExample)> {
        self.entries.iter().map(|(id, e)| (*id, e))
    }

    pub(crate) fn append(&mut self, example: ReasoningExample) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        self.entries.push((id, example));
        if let Some(cap) = self.capacity {
            while self.entries.len() > cap {
                self.entries.remove(0);
            }
        }
        id
    }
}

/// Top-M retrieval: candidates share the target link's child, ranked by
/// similarity of the query to the example's parent-values text, ties by
/// recency (newest first).
pub fn retrieve_examples<'p>(
    pool: &'p ExamplePool,
    query_parent_values: &BTreeMap<String, Value>,
    target_link: &TargetLink,
    m: usize,
    similarity: &dyn Fn(&str, &str) -> f64,
) -> Vec<(u64, &'p ReasoningExample)> {
    if m == 0 {
        return Vec::new();
    }
    let query = render_values(query_parent_values);
    let mut scored: Vec<(f64, u64, &ReasoningExample)> = pool
        .entries()
        .filter(|(_, e)| e.target_link.child == target_link.child)
        .map(|(id, e)| (similarity(&query, &e.parents_text()), id, e))
        .collect();
    // stable ranking: score desc, then newest (largest id) first
    scored.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(b.1.cmp(&a.1))
    });
    scored.into_iter().take(m).map(|(_, id, e)| (id, e)).collect()
}
