//! The causal graph: observation roots, hypothesized intermediate nodes
//! with reinforcement counts, and a single action sink. All mutation goes
//! through `init_graph`, `apply_chains` and `prune_top_k`, each of which
//! preserves the DAG invariants.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::ScmError;

/// Label of the action sink in every graph and in the chain wire grammar.
pub const ACTION_LABEL: &str = "ACTION";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeKind {
    Observation,
    Intermediate,
    Action,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    pub label: String,
    /// How often reflections re-derived this node. Intermediates only.
    pub reinforcement: Option<u32>,
    /// Position in insertion order; the deterministic tie-break everywhere.
    pub inserted: u32,
}

/// An extracted causal pathway: an observation key, zero or more
/// intermediate labels, then the action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalChain {
    pub labels: Vec<String>,
}

impl CausalChain {
    pub fn new(labels: Vec<String>) -> Self {
        CausalChain { labels }
    }

    /// Parse one `obs-key -> label -> ... -> ACTION` line against the known
    /// observation keys. Returns the rejection reason instead of a chain
    /// when the line is malformed.
    pub fn parse_line(line: &str, observation_keys: &[String]) -> Result<CausalChain, String> {
        let labels: Vec<String> = line
            .split("->")
            .map(|part| part.trim().to_string())
            .collect();
        if labels.len() < 2 {
            return Err("chain needs at least `obs -> ACTION`".into());
        }
        if labels.iter().any(|l| l.is_empty()) {
            return Err("empty label in chain".into());
        }
        if !observation_keys.contains(&labels[0]) {
            return Err(format!("unknown observation key '{}'", labels[0]));
        }
        if labels.last().map(String::as_str) != Some(ACTION_LABEL) {
            return Err(format!("chain must end at {ACTION_LABEL}"));
        }
        let middles = &labels[1..labels.len() - 1];
        if middles
            .iter()
            .any(|l| observation_keys.contains(l) || l == ACTION_LABEL)
        {
            return Err("observation or action label used as an intermediate".into());
        }
        let mut seen = BTreeSet::new();
        if !labels.iter().all(|l| seen.insert(l)) {
            return Err("repeated label within chain".into());
        }
        Ok(CausalChain::new(labels))
    }
}

/// Decides whether a freshly extracted label is semantically the same node
/// as an existing intermediate. Returns indexes of all acceptable matches;
/// consolidation picks among them.
pub trait NodeMatcher {
    fn hits(&self, candidate: &str, existing: &[&str]) -> Vec<usize>;
}

/// Matcher that only accepts exact label equality. Useful in tests.
pub struct ExactMatcher;

impl NodeMatcher for ExactMatcher {
    fn hits(&self, candidate: &str, existing: &[&str]) -> Vec<usize> {
        existing
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == candidate)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Per-chain application report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub chain: CausalChain,
    pub accepted: bool,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalGraph {
    nodes: Vec<Node>,
    edges: BTreeSet<(NodeId, NodeId)>,
    /// Direct observation->action edges laid down at initialization; these
    /// are permanent and provide the inference fallback path.
    init_edges: BTreeSet<(NodeId, NodeId)>,
    next_insert: u32,
}

/// Build the minimal starting graph: one root per observation key, one
/// action sink, and a direct edge from every root to the sink.
pub fn init_graph(observation_keys: &[String]) -> Result<CausalGraph, ScmError> {
    if observation_keys.is_empty() {
        return Err(ScmError::EmptyKeys);
    }
    let mut seen = BTreeSet::new();
    for key in observation_keys {
        if !seen.insert(key) {
            return Err(ScmError::DuplicateKey(key.clone()));
        }
        if key == ACTION_LABEL {
            return Err(ScmError::DuplicateKey(key.clone()));
        }
    }
    let mut graph = CausalGraph {
        nodes: Vec::new(),
        edges: BTreeSet::new(),
        init_edges: BTreeSet::new(),
        next_insert: 0,
    };
    for key in observation_keys {
        graph.insert_node(NodeKind::Observation, key.clone());
    }
    let action = graph.insert_node(NodeKind::Action, ACTION_LABEL.to_string());
    for node in graph.nodes.clone() {
        if node.kind == NodeKind::Observation {
            graph.edges.insert((node.id, action));
            graph.init_edges.insert((node.id, action));
        }
    }
    Ok(graph)
}

impl CausalGraph {
    fn insert_node(&mut self, kind: NodeKind, label: String) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        let inserted = self.next_insert;
        self.next_insert += 1;
        self.nodes.push(Node {
            id,
            kind,
            label,
            reinforcement: (kind == NodeKind::Intermediate).then_some(1),
            inserted,
        });
        id
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter()
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.get(id.0 as usize)
    }

    pub fn node_by_label(&self, label: &str) -> Option<&Node> {
        self.nodes().find(|n| n.label == label)
    }

    pub fn edges(&self) -> impl Iterator<Item = &(NodeId, NodeId)> {
        self.edges.iter()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node_count(&self) -> usize {
        self.nodes().count()
    }

    pub fn action_node(&self) -> &Node {
        self.nodes()
            .find(|n| n.kind == NodeKind::Action)
            .expect("graph always holds one action node")
    }

    pub fn observation_nodes(&self) -> Vec<&Node> {
        self.nodes()
            .filter(|n| n.kind == NodeKind::Observation)
            .collect()
    }

    pub fn intermediate_nodes(&self) -> Vec<&Node> {
        self.nodes()
            .filter(|n| n.kind == NodeKind::Intermediate)
            .collect()
    }

    pub fn parents(&self, id: NodeId) -> Vec<NodeId> {
        self.edges
            .iter()
            .filter(|(_, child)| *child == id)
            .map(|(parent, _)| *parent)
            .collect()
    }

    pub fn children(&self, id: NodeId) -> Vec<NodeId> {
        self.edges
            .iter()
            .filter(|(parent, _)| *parent == id)
            .map(|(_, child)| *child)
            .collect()
    }

    fn reaches(&self, from: NodeId, to: NodeId) -> bool {
        let mut stack = vec![from];
        let mut seen = BTreeSet::new();
        while let Some(node) = stack.pop() {
            if node == to {
                return true;
            }
            if seen.insert(node) {
                stack.extend(self.children(node));
            }
        }
        false
    }

    /// Apply extracted chains: consolidate intermediate labels through the
    /// matcher (match => reinforcement, no match => fresh node with count 1)
    /// and add the chain's edges. An edge that would close a cycle is
    /// rejected alone; the rest of the chain still applies.
    pub fn apply_chains(
        &mut self,
        chains: &[CausalChain],
        matcher: &dyn NodeMatcher,
    ) -> Vec<ChainReport> {
        let observation_keys: Vec<String> = self
            .observation_nodes()
            .iter()
            .map(|n| n.label.clone())
            .collect();
        let mut reports = Vec::new();
        for chain in chains {
            let line = chain.labels.join(" -> ");
            let validated = CausalChain::parse_line(&line, &observation_keys);
            let chain = match validated {
                Ok(c) => c,
                Err(reason) => {
                    reports.push(ChainReport {
                        chain: chain.clone(),
                        accepted: false,
                        reason,
                    });
                    continue;
                }
            };

            // Resolve every label to a node id, consolidating intermediates.
            let mut resolved: Vec<NodeId> = Vec::with_capacity(chain.labels.len());
            for (pos, label) in chain.labels.iter().enumerate() {
                let id = if pos == 0 {
                    self.node_by_label(label).expect("validated obs key").id
                } else if pos == chain.labels.len() - 1 {
                    self.action_node().id
                } else {
                    let existing: Vec<(NodeId, String, u32, u32)> = self
                        .intermediate_nodes()
                        .iter()
                        .map(|n| (n.id, n.label.clone(), n.reinforcement.unwrap_or(0), n.inserted))
                        .collect();
                    let labels: Vec<&str> =
                        existing.iter().map(|(_, l, _, _)| l.as_str()).collect();
                    let hits = matcher.hits(label, &labels);
                    if hits.is_empty() {
                        self.insert_node(NodeKind::Intermediate, label.clone())
                    } else {
                        // on multiple hits the highest-count node absorbs the
                        // reinforcement; ties go to the earliest inserted
                        let best = hits
                            .into_iter()
                            .map(|i| &existing[i])
                            .max_by_key(|(_, _, count, inserted)| {
                                (*count, std::cmp::Reverse(*inserted))
                            })
                            .expect("non-empty hits")
                            .0;
                        let node = &mut self.nodes[best.0 as usize];
                        node.reinforcement = Some(node.reinforcement.unwrap_or(0) + 1);
                        best
                    }
                };
                resolved.push(id);
            }

            let mut rejected_edges = Vec::new();
            for pair in resolved.windows(2) {
                let (parent, child) = (pair[0], pair[1]);
                if parent == child {
                    rejected_edges.push((parent, child, "self-loop"));
                    continue;
                }
                if self.edges.contains(&(parent, child)) {
                    continue;
                }
                if self.reaches(child, parent) {
                    rejected_edges.push((parent, child, "cycle"));
                    continue;
                }
                self.edges.insert((parent, child));
            }
            let reason = if rejected_edges.is_empty() {
                "applied".to_string()
            } else {
                rejected_edges
                    .iter()
                    .map(|(p, c, why)| {
                        format!(
                            "edge {} -> {} rejected: {why}",
                            self.nodes[p.0 as usize].label, self.nodes[c.0 as usize].label
                        )
                    })
                    .collect::<Vec<_>>()
                    .join("; ")
            };
            reports.push(ChainReport {
                chain,
                accepted: true,
                reason,
            });
        }
        // a rejected edge can strand a freshly inserted node off the
        // observation->action path; sweep such orphans out
        self.drop_orphans();
        debug_assert_eq!(self.check_invariants(), Ok(()));
        reports
    }

    /// Remove intermediates that lost the path property (no parent or no
    /// child). Pre-existing nodes always keep their paths because edges are
    /// only ever added outside pruning, so this touches strays only.
    fn drop_orphans(&mut self) {
        loop {
            let orphan = self
                .intermediate_nodes()
                .iter()
                .find(|n| self.parents(n.id).is_empty() || self.children(n.id).is_empty())
                .map(|n| n.id);
            match orphan {
                Some(id) => self.remove_node(id),
                None => break,
            }
        }
    }

    /// Rank intermediates by (count desc, insertion asc) and keep the top
    /// `k`; everything below is removed with its incident edges. Orphans
    /// that lose their path property cascade out so the result satisfies
    /// every graph invariant. Initialization edges are untouched.
    pub fn prune_top_k(&mut self, k: usize) {
        let mut ranked: Vec<(u32, u32, NodeId)> = self
            .intermediate_nodes()
            .iter()
            .map(|n| (n.reinforcement.unwrap_or(0), n.inserted, n.id))
            .collect();
        ranked.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut doomed: Vec<NodeId> = ranked.iter().skip(k).map(|(_, _, id)| *id).collect();
        // removal compacts ids, so drop the highest indexes first
        doomed.sort_by(|a, b| b.cmp(a));
        for id in doomed {
            self.remove_node(id);
        }
        // cascade: an intermediate must lie on an observation->action path,
        // so survivors that lost their only parent or child go too
        self.drop_orphans();
        debug_assert_eq!(self.check_invariants(), Ok(()));
    }

    /// Remove a node and compact ids so node id always equals its index.
    /// Nothing holds node ids across graph updates (credit assignment keys
    /// on labels), so remapping is safe.
    fn remove_node(&mut self, id: NodeId) {
        self.nodes.remove(id.0 as usize);
        for node in &mut self.nodes {
            if node.id.0 > id.0 {
                node.id.0 -= 1;
            }
        }
        let remap = |n: NodeId| if n.0 > id.0 { NodeId(n.0 - 1) } else { n };
        self.edges = self
            .edges
            .iter()
            .filter(|(p, c)| *p != id && *c != id)
            .map(|(p, c)| (remap(*p), remap(*c)))
            .collect();
        self.init_edges = self
            .init_edges
            .iter()
            .filter(|(p, c)| *p != id && *c != id)
            .map(|(p, c)| (remap(*p), remap(*c)))
            .collect();
    }

    /// Deterministic topological order: parents before children, ties broken
    /// by kind (observation < intermediate < action) then insertion order.
    pub fn topological_order(&self) -> Result<Vec<NodeId>, ScmError> {
        let live: Vec<&Node> = self.nodes().collect();
        let mut indegree: BTreeMap<NodeId, usize> = live.iter().map(|n| (n.id, 0)).collect();
        for (_, child) in &self.edges {
            if let Some(d) = indegree.get_mut(child) {
                *d += 1;
            }
        }
        let sort_key = |id: NodeId| {
            let n = &self.nodes[id.0 as usize];
            (n.kind, n.inserted)
        };
        let mut ready: Vec<NodeId> = indegree
            .iter()
            .filter(|(_, &d)| d == 0)
            .map(|(id, _)| *id)
            .collect();
        let mut order = Vec::with_capacity(live.len());
        while !ready.is_empty() {
            ready.sort_by_key(|&id| sort_key(id));
            let next = ready.remove(0);
            order.push(next);
            for child in self.children(next) {
                let d = indegree.get_mut(&child).expect("live child");
                *d -= 1;
                if *d == 0 {
                    ready.push(child);
                }
            }
        }
        if order.len() != live.len() {
            return Err(ScmError::InvariantViolation(
                "cycle detected during topological sort".into(),
            ));
        }
        Ok(order)
    }

    /// Verify every structural invariant, naming the first violation.
    pub fn check_invariants(&self) -> Result<(), String> {
        let live: Vec<&Node> = self.nodes().collect();
        let action_count = live.iter().filter(|n| n.kind == NodeKind::Action).count();
        if action_count != 1 {
            return Err(format!("expected exactly one action node, found {action_count}"));
        }
        let action = self.action_node().id;
        for node in &live {
            match node.kind {
                NodeKind::Observation => {
                    if !self.parents(node.id).is_empty() {
                        return Err(format!("observation '{}' has incoming edges", node.label));
                    }
                    if node.reinforcement.is_some() {
                        return Err(format!(
                            "observation '{}' carries a reinforcement count",
                            node.label
                        ));
                    }
                }
                NodeKind::Action => {
                    if !self.children(node.id).is_empty() {
                        return Err("action node has outgoing edges".into());
                    }
                    if node.reinforcement.is_some() {
                        return Err("action node carries a reinforcement count".into());
                    }
                }
                NodeKind::Intermediate => {
                    if node.reinforcement.unwrap_or(0) < 1 {
                        return Err(format!(
                            "intermediate '{}' has reinforcement < 1",
                            node.label
                        ));
                    }
                    if self.parents(node.id).is_empty() || !self.reaches(node.id, action) {
                        return Err(format!(
                            "intermediate '{}' is not on an observation->action path",
                            node.label
                        ));
                    }
                }
            }
            if node.label.is_empty() {
                return Err("empty node label".into());
            }
        }
        for (p, c) in &self.edges {
            if self.node(*p).is_none() || self.node(*c).is_none() {
                return Err("edge endpoint does not exist".into());
            }
        }
        for (p, c) in &self.init_edges {
            if !self.edges.contains(&(*p, *c)) {
                return Err("initialization edge was removed".into());
            }
        }
        if self.topological_order().is_err() {
            return Err("graph contains a cycle".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn keys(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn chain(labels: &[&str]) -> CausalChain {
        CausalChain::new(labels.iter().map(|s| s.to_string()).collect())
    }

    #[test]
    fn init_graph_shapes() {
        let g = init_graph(&keys(&["last-target", "last-choices"])).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 2);
        let g = init_graph(&keys(&["x"])).unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edge_count(), 1);
        assert!(matches!(init_graph(&[]), Err(ScmError::EmptyKeys)));
        assert!(matches!(
            init_graph(&keys(&["a", "a"])),
            Err(ScmError::DuplicateKey(_))
        ));
    }

    #[test]
    fn matching_chain_increments_count_only() {
        let mut g = init_graph(&keys(&["last-target"])).unwrap();
        g.apply_chains(
            &[chain(&["last-target", "believes-average-drops", "ACTION"])],
            &ExactMatcher,
        );
        g.apply_chains(
            &[chain(&["last-target", "believes-average-drops", "ACTION"])],
            &ExactMatcher,
        );
        let nodes_before = g.node_count();
        let edges_before = g.edge_count();
        g.apply_chains(
            &[chain(&["last-target", "believes-average-drops", "ACTION"])],
            &ExactMatcher,
        );
        let node = g.node_by_label("believes-average-drops").unwrap();
        assert_eq!(node.reinforcement, Some(3));
        assert_eq!(g.node_count(), nodes_before);
        assert_eq!(g.edge_count(), edges_before);
    }

    #[test]
    fn new_intermediate_inserted_with_count_one() {
        let mut g = init_graph(&keys(&["last-target"])).unwrap();
        let before_edges = g.edge_count();
        let reports = g.apply_chains(
            &[chain(&["last-target", "expects-undercut", "ACTION"])],
            &ExactMatcher,
        );
        assert!(reports[0].accepted);
        let node = g.node_by_label("expects-undercut").unwrap();
        assert_eq!(node.reinforcement, Some(1));
        assert_eq!(g.edge_count(), before_edges + 2);
    }

    #[test]
    fn cycle_creating_edge_rejected_alone() {
        let mut g = init_graph(&keys(&["o"])).unwrap();
        g.apply_chains(
            &[chain(&["o", "m1", "m2", "ACTION"])],
            &ExactMatcher,
        );
        // m2 -> m1 would close a cycle with the existing m1 -> m2
        let reports = g.apply_chains(&[chain(&["o", "m2", "m1", "ACTION"])], &ExactMatcher);
        assert!(reports[0].accepted);
        assert!(reports[0].reason.contains("cycle"));
        assert!(g.check_invariants().is_ok());
        // the valid edges of the chain were still applied
        let m2 = g.node_by_label("m2").unwrap().id;
        let o = g.node_by_label("o").unwrap().id;
        assert!(g.edges.contains(&(o, m2)));
    }

    #[test]
    fn unknown_observation_key_rejects_chain() {
        let mut g = init_graph(&keys(&["o"])).unwrap();
        let reports = g.apply_chains(&[chain(&["weather", "ACTION"])], &ExactMatcher);
        assert!(!reports[0].accepted);
        assert!(reports[0].reason.contains("unknown observation key"));
    }

    #[test]
    fn prune_keeps_top_k_by_count_then_insertion() {
        let mut g = init_graph(&keys(&["o"])).unwrap();
        for (label, count) in [("a", 5), ("b", 3), ("c", 1)] {
            for _ in 0..count {
                g.apply_chains(&[chain(&["o", label, "ACTION"])], &ExactMatcher);
            }
        }
        g.prune_top_k(2);
        assert!(g.node_by_label("a").is_some());
        assert!(g.node_by_label("b").is_some());
        assert!(g.node_by_label("c").is_none());
        assert!(g.check_invariants().is_ok());
    }

    #[test]
    fn prune_with_large_k_is_identity() {
        let mut g = init_graph(&keys(&["o"])).unwrap();
        g.apply_chains(&[chain(&["o", "m", "ACTION"])], &ExactMatcher);
        let before = g.clone();
        g.prune_top_k(10);
        assert_eq!(g, before);
    }

    #[test]
    fn prune_zero_reverts_to_init_shape() {
        let mut g = init_graph(&keys(&["o1", "o2"])).unwrap();
        g.apply_chains(
            &[
                chain(&["o1", "m1", "ACTION"]),
                chain(&["o2", "m2", "ACTION"]),
            ],
            &ExactMatcher,
        );
        g.prune_top_k(0);
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 2);
        assert!(g.intermediate_nodes().is_empty());
    }

    #[test]
    fn topological_order_is_deterministic() {
        let g = init_graph(&keys(&["o1", "o2"])).unwrap();
        let order = g.topological_order().unwrap();
        let labels: Vec<&str> = order
            .iter()
            .map(|id| g.node(*id).unwrap().label.as_str())
            .collect();
        assert_eq!(labels, vec!["o1", "o2", "ACTION"]);

        let mut g = init_graph(&keys(&["o1"])).unwrap();
        g.apply_chains(&[chain(&["o1", "m1", "ACTION"])], &ExactMatcher);
        let labels: Vec<String> = g
            .topological_order()
            .unwrap()
            .iter()
            .map(|id| g.node(*id).unwrap().label.clone())
            .collect();
        assert_eq!(labels, vec!["o1", "m1", "ACTION"]);
    }

    #[test]
    fn insertion_order_breaks_topological_ties() {
        let mut g = init_graph(&keys(&["o1"])).unwrap();
        g.apply_chains(
            &[
                chain(&["o1", "mb", "ACTION"]),
                chain(&["o1", "ma", "ACTION"]),
            ],
            &ExactMatcher,
        );
        let labels: Vec<String> = g
            .topological_order()
            .unwrap()
            .iter()
            .map(|id| g.node(*id).unwrap().label.clone())
            .collect();
        // mb was inserted first, so it precedes ma despite the name order
        assert_eq!(labels, vec!["o1", "mb", "ma", "ACTION"]);
    }

    #[test]
    fn chain_grammar_validation() {
        let keys = keys(&["last-target"]);
        assert!(CausalChain::parse_line("last-target -> expects-undercut -> ACTION", &keys).is_ok());
        assert!(CausalChain::parse_line("last-target -> ACTION", &keys).is_ok());
        assert!(CausalChain::parse_line("weather -> ACTION", &keys).is_err());
        assert!(CausalChain::parse_line("last-target -> x", &keys).is_err());
        assert!(CausalChain::parse_line("last-target -> last-target -> ACTION", &keys).is_err());
        assert!(CausalChain::parse_line("ACTION", &keys).is_err());
    }
}
