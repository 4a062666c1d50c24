//! Structured opponent modeling machinery: the causal graph, example pools
//! and topological inference. Independent of any particular game; backends
//! are abstract reasoners.

pub mod graph;
pub mod infer;
pub mod pool;

pub use graph::{
    init_graph, CausalChain, CausalGraph, ChainReport, ExactMatcher, Node, NodeId, NodeKind,
    NodeMatcher, ACTION_LABEL,
};
pub use infer::{credit_assign, infer, InferenceConfig, InferenceTrace, MatchPredicate, TraceRecord};
pub use pool::{render_values, retrieve_examples, ExamplePool, ReasoningExample, TargetLink};
