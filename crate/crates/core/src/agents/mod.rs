//! Agents: the opponent-modeling agent, prompt-strategy baselines, and
//! deterministic scripted opponents.

pub mod baselines;
pub mod klevel;
pub mod scripted;
pub mod som;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::Reasoner;
use crate::error::{BackendError, ConfigError, ScmError};
use crate::game::{GameKind, GameSpec, Observation, RoundReveal};
use crate::scm::MatchPredicate;
use crate::types::{Action, PlayerId, Value};

pub use baselines::{mixed_opponent, parse_numeric_action, parse_vote, BaselineAgent};
pub use klevel::k_level_choice;
pub use scripted::{scripted_opponent, ScriptedRuleId};
pub use som::{OpponentModel, SomAgent, SomParams};

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("backend failure: {0}")]
    Backend(#[from] BackendError),
    #[error("inference failure: {0}")]
    Scm(#[from] ScmError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AgentKind {
    Som,
    LlmOnly,
    Cot,
    Tot,
    KR,
    Reflexion,
    Mixed,
    Scripted,
}

impl AgentKind {
    pub fn name(&self) -> &'static str {
        match self {
            AgentKind::Som => "som",
            AgentKind::LlmOnly => "llm-only",
            AgentKind::Cot => "cot",
            AgentKind::Tot => "tot",
            AgentKind::KR => "k-r",
            AgentKind::Reflexion => "reflexion",
            AgentKind::Mixed => "mixed",
            AgentKind::Scripted => "scripted",
        }
    }

    pub fn parse(text: &str) -> Option<AgentKind> {
        match text {
            "som" => Some(AgentKind::Som),
            "llm-only" => Some(AgentKind::LlmOnly),
            "cot" => Some(AgentKind::Cot),
            "tot" => Some(AgentKind::Tot),
            "k-r" => Some(AgentKind::KR),
            "reflexion" => Some(AgentKind::Reflexion),
            "mixed" => Some(AgentKind::Mixed),
            "scripted" => Some(AgentKind::Scripted),
            _ => None,
        }
    }
}

/// Agent configuration as expressed in the tournament config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    pub kind: String,
    /// Top-K graph pruning size.
    pub prune_k: usize,
    /// Top-M example retrieval size.
    pub retrieve_m: usize,
    /// Credit-assignment tolerance; None picks the per-game default
    /// (5 action units for numeric games, exact equality otherwise).
    pub match_tolerance: Option<f64>,
    pub pool_capacity: usize,
    pub enable_graph: bool,
    pub enable_intermediates: bool,
    pub enable_refine: bool,
    pub enable_examples: bool,
    /// Recursion depth for k-level reasoning.
    pub k_level: u32,
    /// Compute k-level choices analytically instead of prompting.
    pub kr_analytic: bool,
    pub scripted_rule: Option<String>,
    pub seed: u64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            kind: "som".into(),
            prune_k: 5,
            retrieve_m: 3,
            match_tolerance: None,
            pool_capacity: 200,
            enable_graph: true,
            enable_intermediates: true,
            enable_refine: true,
            enable_examples: true,
            k_level: 2,
            kr_analytic: false,
            scripted_rule: None,
            seed: 0,
        }
    }
}

impl AgentConfig {
    pub fn of_kind(kind: AgentKind) -> Self {
        AgentConfig {
            kind: kind.name().into(),
            ..Default::default()
        }
    }

    pub fn agent_kind(&self) -> Result<AgentKind, ConfigError> {
        AgentKind::parse(&self.kind)
            .ok_or_else(|| ConfigError::Invalid(format!("unknown agent kind '{}'", self.kind)))
    }

    pub fn match_predicate(&self, game: GameKind) -> MatchPredicate {
        match (self.match_tolerance, game) {
            (Some(eps), _) => MatchPredicate::NumericTolerance(eps),
            (None, GameKind::G08a | GameKind::Sag) => MatchPredicate::NumericTolerance(5.0),
            (None, GameKind::Undercover) => MatchPredicate::Exact,
        }
    }
}

/// Everything an agent learns at the start of an episode.
#[derive(Debug, Clone)]
pub struct EpisodeContext {
    pub seat: PlayerId,
    pub spec: GameSpec,
    pub episode_seed: u64,
    pub episode_index: u64,
}

/// What an agent sees when asked to act.
pub struct ActContext<'a> {
    pub observation: &'a Observation,
    /// Current legal numeric range, when the phase is numeric.
    pub numeric_range: Option<(i64, i64)>,
    pub alive: &'a [PlayerId],
}

/// A resolved (predicted, actual) pair for the deviation metric.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictionPair {
    pub round: u32,
    pub opponent: PlayerId,
    pub predicted: Value,
    pub actual: Value,
}

/// One entry in an agent's per-episode event log. The sequence numbers
/// pin the ordering contract: credit assignment, then graph update, then
/// the next prediction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgentEvent {
    pub seq: u64,
    pub round: u32,
    pub stage: String,
    pub detail: String,
}

pub trait Agent: Send + Sync {
    fn kind_name(&self) -> String;

    fn begin_episode(&mut self, ctx: &EpisodeContext);

    fn act(&mut self, ctx: &ActContext<'_>) -> Result<Action, AgentError>;

    /// Called after every resolved phase with whatever this game reveals.
    fn observe_round(&mut self, reveal: &RoundReveal);

    fn end_episode(&mut self) {}

    /// Freeze model state (evaluation phase). Default no-op.
    fn freeze(&mut self, _frozen: bool) {}

    /// Supply the warm-up history digest baselines receive as context.
    fn set_history_digest(&mut self, _digest: String) {}

    fn drain_predictions(&mut self) -> Vec<PredictionPair> {
        Vec::new()
    }

    fn drain_events(&mut self) -> Vec<AgentEvent> {
        Vec::new()
    }

    /// The transferable opponent model, for agents that maintain one.
    fn opponent_model(&self) -> Option<&OpponentModel> {
        None
    }

    fn load_opponent_model(&mut self, _model: OpponentModel) -> Result<(), String> {
        Err("this agent does not maintain an opponent model".into())
    }

    fn clone_boxed(&self) -> Box<dyn Agent>;
}

/// Build an agent from its config, game and backend.
pub fn build_agent(
    config: &AgentConfig,
    spec: &GameSpec,
    backend: Arc<dyn Reasoner>,
) -> Result<Box<dyn Agent>, ConfigError> {
    let kind = config.agent_kind()?;
    match kind {
        AgentKind::Som => Ok(Box::new(SomAgent::new(
            SomParams::from_config(config, spec.kind),
            backend,
        ))),
        AgentKind::Scripted => {
            let rule_id = config
                .scripted_rule
                .clone()
                .ok_or_else(|| ConfigError::Invalid("scripted agent needs scripted_rule".into()))?;
            let rule = ScriptedRuleId::parse(&rule_id).ok_or_else(|| {
                ConfigError::Invalid(format!("unknown scripted rule '{rule_id}'"))
            })?;
            Ok(Box::new(ScriptedAgent { rule }))
        }
        AgentKind::Mixed => Ok(Box::new(baselines::MixedAgent::new(config.clone(), backend))),
        _ => Ok(Box::new(BaselineAgent::new(kind, config.clone(), backend))),
    }
}

/// Thin wrapper giving scripted rules the Agent interface.
#[derive(Clone)]
pub struct ScriptedAgent {
    rule: ScriptedRuleId,
}

impl ScriptedAgent {
    pub fn new(rule: ScriptedRuleId) -> Self {
        ScriptedAgent { rule }
    }
}

impl Agent for ScriptedAgent {
    fn kind_name(&self) -> String {
        format!("scripted:{}", self.rule.name())
    }

    fn begin_episode(&mut self, _ctx: &EpisodeContext) {}

    fn act(&mut self, ctx: &ActContext<'_>) -> Result<Action, AgentError> {
        Ok(scripted_opponent(&self.rule, ctx.observation))
    }

    fn observe_round(&mut self, _reveal: &RoundReveal) {}

    fn clone_boxed(&self) -> Box<dyn Agent> {
        Box::new(self.clone())
    }
}

/// The incremental component grid: each variant adds one mechanism on top
/// of the previous, ending at the full opponent-modeling agent. All five
/// share the action policy so rows differ only in how they model.
pub fn ablation_variants(base: &AgentConfig) -> Vec<(&'static str, AgentConfig)> {
    let make = |graph: bool, intermediates: bool, refine: bool, examples: bool| AgentConfig {
        kind: "som".into(),
        enable_graph: graph,
        enable_intermediates: intermediates,
        enable_refine: refine,
        enable_examples: examples,
        ..base.clone()
    };
    vec![
        ("llm-only", make(false, false, false, false)),
        ("static-graph", make(true, false, false, false)),
        ("intermediate-nodes", make(true, true, false, false)),
        ("graph-refine", make(true, true, true, false)),
        ("full-som", make(true, true, true, true)),
    ]
}

/// Render predicted values for a set of opponents, used in prompts.
pub fn render_predictions(predictions: &BTreeMap<PlayerId, Value>) -> String {
    predictions
        .iter()
        .map(|(p, v)| format!("predicted-{p} = {v}"))
        .collect::<Vec<_>>()
        .join("\n")
}
