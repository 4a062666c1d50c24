//! Topological inference over the causal graph and the strict
//! credit-assignment rule that feeds the example pools.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::backend::{BackendRequest, Purpose, Reasoner};
use crate::error::ScmError;
use crate::scm::graph::{CausalGraph, NodeId, NodeKind};
use crate::scm::pool::{retrieve_examples, ExamplePool, ReasoningExample, TargetLink};
use crate::types::Value;

/// One inference step: the node, the parent values it consumed, the
/// retrieved example ids, and what came out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub node: NodeId,
    pub label: String,
    pub parent_values: BTreeMap<String, Value>,
    pub retrieved: Vec<u64>,
    pub value: Value,
    pub reasoning: String,
    /// Set when the backend failed and the declared fallback was used.
    pub fallback: bool,
}

/// Complete record of one graph traversal. Records appear in the
/// topological order used; every non-root node contributes exactly one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceTrace {
    pub records: Vec<TraceRecord>,
    pub predicted: Value,
}

#[derive(Debug, Clone)]
pub struct InferenceConfig {
    /// Top-M retrieval size.
    pub retrieval: usize,
    /// Gate for the example-pool mechanism; when off, prompts carry no
    /// retrieved examples.
    pub use_examples: bool,
    /// Action-node value when the backend fails there. Callers supply the
    /// opponent's last observed action or the game's midpoint.
    pub action_fallback: Value,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        InferenceConfig {
            retrieval: 3,
            use_examples: true,
            action_fallback: Value::none(),
        }
    }
}

fn infer_prompt(
    label: &str,
    parent_values: &BTreeMap<String, Value>,
    examples: &[(u64, &ReasoningExample)],
) -> String {
    let mut parents = String::new();
    for (k, v) in parent_values {
        parents.push_str(&format!("{k} = {v}\n"));
    }
    let mut shots = String::new();
    if !examples.is_empty() {
        shots.push_str("examples of this step from past validated rounds:\n");
        for (id, e) in examples {
            // keep example lines free of `k = v` shapes (see render_values)
            shots.push_str(&format!(
                "example {id}: [{}] => {} ({})\n",
                e.parents_text(),
                e.child_value,
                e.reasoning.replace('\n', " ").replace('=', ":")
            ));
        }
    }
    crate::backend::prompts::render(
        crate::backend::prompts::INFER_NODE,
        &[
            ("node", label),
            ("parents", parents.trim_end()),
            ("examples", shots.trim_end()),
        ],
    )
}

/// Walk the graph in topological order: roots take the supplied observation
/// values, every other node is computed by the backend from its parents and
/// retrieved examples. Pure given a deterministic backend.
pub fn infer(
    graph: &CausalGraph,
    observation_values: &BTreeMap<String, Value>,
    pool: &ExamplePool,
    backend: &dyn Reasoner,
    config: &InferenceConfig,
) -> Result<InferenceTrace, ScmError> {
    for node in graph.observation_nodes() {
        if !observation_values.contains_key(&node.label) {
            return Err(ScmError::MissingRootValue(node.label.clone()));
        }
    }
    let order = graph.topological_order()?;
    let mut values: BTreeMap<NodeId, Value> = BTreeMap::new();
    let mut records = Vec::new();
    for id in order {
        let node = graph.node(id).expect("ordered node exists");
        if node.kind == NodeKind::Observation {
            values.insert(id, observation_values[&node.label].clone());
            continue;
        }
        let mut parent_values = BTreeMap::new();
        let mut parent_labels = std::collections::BTreeSet::new();
        for parent in graph.parents(id) {
            let p = graph.node(parent).expect("parent exists");
            parent_labels.insert(p.label.clone());
            parent_values.insert(p.label.clone(), values[&parent].clone());
        }
        let link = TargetLink {
            parents: parent_labels,
            child: node.label.clone(),
        };
        let examples = if config.use_examples && config.retrieval > 0 {
            retrieve_examples(
                pool,
                &parent_values,
                &link,
                config.retrieval,
                &crate::backend::similarity,
            )
        } else {
            Vec::new()
        };
        let retrieved: Vec<u64> = examples.iter().map(|(id, _)| *id).collect();
        let prompt = infer_prompt(&node.label, &parent_values, &examples);
        let request = BackendRequest::user(Purpose::Infer, prompt);
        let (value, reasoning, fallback) = match backend.complete(&request) {
            Ok(text) => {
                let mut lines = text.trim().lines();
                let value = Value::text(lines.next().unwrap_or("").trim());
                let reasoning = lines.collect::<Vec<_>>().join("\n");
                let reasoning = if reasoning.is_empty() {
                    text.trim().to_string()
                } else {
                    reasoning
                };
                (value, reasoning, false)
            }
            Err(e) => {
                log::warn!("backend failed on node '{}': {e}", node.label);
                let value = if node.kind == NodeKind::Action {
                    config.action_fallback.clone()
                } else {
                    Value::text("")
                };
                (value, String::new(), true)
            }
        };
        values.insert(id, value.clone());
        records.push(TraceRecord {
            node: id,
            label: node.label.clone(),
            parent_values,
            retrieved,
            value,
            reasoning,
            fallback,
        });
    }
    let predicted = values[&graph.action_node().id].clone();
    Ok(InferenceTrace { records, predicted })
}

/// When is a prediction "correct"? Exact equality for discrete/text actions,
/// absolute tolerance for numeric ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "epsilon")]
pub enum MatchPredicate {
    Exact,
    /// Both values numeric and |predicted - actual| <= epsilon; non-numeric
    /// values fall back to exact text equality.
    NumericTolerance(f64),
}

impl MatchPredicate {
    pub fn matches(&self, predicted: &Value, actual: &Value) -> bool {
        match self {
            MatchPredicate::Exact => predicted == actual,
            MatchPredicate::NumericTolerance(eps) => {
                match (predicted.as_number(), actual.as_number()) {
                    (Some(p), Some(a)) => (p - a).abs() <= *eps,
                    _ => predicted == actual,
                }
            }
        }
    }
}

/// Strict credit assignment: only when the final action prediction matched
/// the observed action are the trace's reasoning steps stored as examples.
/// Returns how many examples were appended.
pub fn credit_assign(
    trace: &InferenceTrace,
    predicted: &Value,
    actual: &Value,
    predicate: MatchPredicate,
    pool: &mut ExamplePool,
) -> usize {
    if !predicate.matches(predicted, actual) {
        return 0;
    }
    let mut appended = 0;
    for record in &trace.records {
        pool.append(ReasoningExample {
            parent_values: record.parent_values.clone(),
            child_value: record.value.clone(),
            reasoning: record.reasoning.clone(),
            target_link: TargetLink {
                parents: record.parent_values.keys().cloned().collect(),
                child: record.label.clone(),
            },
        });
        appended += 1;
    }
    appended
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::ScriptedBackend;
    use crate::scm::graph::{init_graph, CausalChain, ExactMatcher};

    fn keys(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn obs(pairs: &[(&str, &str)]) -> BTreeMap<String, Value> {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), Value::text(*v)))
            .collect()
    }

    #[test]
    fn direct_graph_arithmetic_rule() {
        let graph = init_graph(&keys(&["last-target"])).unwrap();
        let backend = ScriptedBackend::from_rules_text(
            "infer :: node: ACTION :: {round(0.8 * last-target)}\n",
        )
        .unwrap();
        let pool = ExamplePool::new("opp", None);
        let trace = infer(
            &graph,
            &obs(&[("last-target", "40")]),
            &pool,
            &backend,
            &InferenceConfig::default(),
        )
        .unwrap();
        assert_eq!(trace.predicted, Value::text("32"));
        assert_eq!(trace.records.len(), 1);
    }

    #[test]
    fn two_step_composition_through_an_intermediate() {
        let mut graph = init_graph(&keys(&["last-target"])).unwrap();
        graph.apply_chains(
            &[CausalChain::new(
                keys(&["last-target", "adjusted", "ACTION"]),
            )],
            &ExactMatcher,
        );
        let backend = ScriptedBackend::from_rules_text(
            "infer :: node: adjusted :: {last-target - 10}\n\
             infer :: node: ACTION :: {adjusted}\n",
        )
        .unwrap();
        let pool = ExamplePool::new("opp", None);
        let trace = infer(
            &graph,
            &obs(&[("last-target", "50")]),
            &pool,
            &backend,
            &InferenceConfig::default(),
        )
        .unwrap();
        assert_eq!(trace.predicted, Value::text("40"));
        assert_eq!(trace.records.len(), 2);
        assert_eq!(trace.records[0].label, "adjusted");
        assert_eq!(trace.records[0].value, Value::text("40"));
    }

    #[test]
    fn constant_backend_ignores_observations() {
        let graph = init_graph(&keys(&["a", "b"])).unwrap();
        let backend = ScriptedBackend::from_rules_text("infer ::  :: 7\n").unwrap();
        let pool = ExamplePool::new("opp", None);
        for values in [&obs(&[("a", "1"), ("b", "2")]), &obs(&[("a", "9"), ("b", "0")])] {
            let trace = infer(&graph, values, &pool, &backend, &InferenceConfig::default())
                .unwrap();
            assert_eq!(trace.predicted, Value::text("7"));
        }
    }

    #[test]
    fn missing_root_value_is_a_precondition_error() {
        let graph = init_graph(&keys(&["a", "b"])).unwrap();
        let backend = ScriptedBackend::from_rules_text("infer ::  :: 7\n").unwrap();
        let pool = ExamplePool::new("opp", None);
        let result = infer(
            &graph,
            &obs(&[("a", "1")]),
            &pool,
            &backend,
            &InferenceConfig::default(),
        );
        assert!(matches!(result, Err(ScmError::MissingRootValue(k)) if k == "b"));
    }

    #[test]
    fn backend_failure_flags_record_and_uses_fallback() {
        let mut graph = init_graph(&keys(&["o"])).unwrap();
        graph.apply_chains(
            &[CausalChain::new(keys(&["o", "m", "ACTION"]))],
            &ExactMatcher,
        );
        // rule only for the action node; the intermediate has no rule
        let backend =
            ScriptedBackend::from_rules_text("infer :: node: ACTION :: 9\n").unwrap();
        let pool = ExamplePool::new("opp", None);
        let config = InferenceConfig {
            action_fallback: Value::text("42"),
            ..Default::default()
        };
        let trace = infer(&graph, &obs(&[("o", "5")]), &pool, &backend, &config).unwrap();
        assert!(trace.records[0].fallback);
        assert_eq!(trace.records[0].value, Value::text(""));
        // ACTION still resolved by its own rule
        assert_eq!(trace.predicted, Value::text("9"));

        // now break every rule: the action falls back too
        let dead = ScriptedBackend::from_rules_text("act ::  :: x\n").unwrap();
        let trace = infer(&graph, &obs(&[("o", "5")]), &pool, &dead, &config).unwrap();
        assert_eq!(trace.predicted, Value::text("42"));
        assert!(trace.records.iter().all(|r| r.fallback));
    }

    #[test]
    fn credit_assign_paths() {
        let graph = init_graph(&keys(&["o"])).unwrap();
        let backend = ScriptedBackend::from_rules_text("infer ::  :: 32\n").unwrap();
        let mut pool = ExamplePool::new("opp", None);
        let trace = infer(
            &graph,
            &obs(&[("o", "40")]),
            &pool,
            &backend,
            &InferenceConfig::default(),
        )
        .unwrap();

        // exact match grows the pool by the trace's non-root count
        let grown = credit_assign(
            &trace,
            &Value::text("32"),
            &Value::text("32"),
            MatchPredicate::Exact,
            &mut pool,
        );
        assert_eq!(grown, 1);
        assert_eq!(pool.len(), 1);

        // mismatch leaves the pool untouched
        let grown = credit_assign(
            &trace,
            &Value::text("32"),
            &Value::text("40"),
            MatchPredicate::Exact,
            &mut pool,
        );
        assert_eq!(grown, 0);
        assert_eq!(pool.len(), 1);

        // |33 - 32| <= 5 counts as a match under the numeric predicate
        let grown = credit_assign(
            &trace,
            &Value::text("33"),
            &Value::text("32"),
            MatchPredicate::NumericTolerance(5.0),
            &mut pool,
        );
        assert_eq!(grown, 1);
        assert_eq!(pool.len(), 2);
    }

    #[test]
    fn inference_is_pure_given_a_deterministic_backend() {
        let graph = init_graph(&keys(&["o"])).unwrap();
        let backend =
            ScriptedBackend::from_rules_text("infer ::  :: {o + 1}\n").unwrap();
        let pool = ExamplePool::new("opp", None);
        let a = infer(
            &graph,
            &obs(&[("o", "4")]),
            &pool,
            &backend,
            &InferenceConfig::default(),
        )
        .unwrap();
        let b = infer(
            &graph,
            &obs(&[("o", "4")]),
            &pool,
            &backend,
            &InferenceConfig::default(),
        )
        .unwrap();
        assert_eq!(a, b);
    }
}
