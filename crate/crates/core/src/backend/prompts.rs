//! Prompt templates and the reflect/extract operations built on them.
//!
//! Templates are versioned data files under `templates/`; tests pin their
//! version lines so prompt drift is deliberate. The scripted backend
//! pattern-matches on rendered prompts, so renderings keep a stable
//! `name = value` line shape.

use crate::backend::{BackendRequest, Purpose, Reasoner};
use crate::error::BackendError;
use crate::game::state::{Observation, RevealRecord};
use crate::scm::graph::CausalChain;
use crate::types::Value;

pub const REFLECT: &str = include_str!("../../templates/reflect.txt");
pub const EXTRACT: &str = include_str!("../../templates/extract.txt");
pub const INFER_NODE: &str = include_str!("../../templates/infer_node.txt");
pub const INFER_DIRECT: &str = include_str!("../../templates/infer_direct.txt");
pub const MATCH: &str = include_str!("../../templates/match.txt");
pub const ACT_G08A: &str = include_str!("../../templates/act_g08a.txt");
pub const ACT_SAG: &str = include_str!("../../templates/act_sag.txt");
pub const ACT_UNDERCOVER_CLUE: &str = include_str!("../../templates/act_undercover_clue.txt");
pub const ACT_UNDERCOVER_VOTE: &str = include_str!("../../templates/act_undercover_vote.txt");
pub const TOT_CANDIDATE: &str = include_str!("../../templates/tot_candidate.txt");
pub const TOT_SCORE: &str = include_str!("../../templates/tot_score.txt");
pub const REFLEXION_ROUND: &str = include_str!("../../templates/reflexion_round.txt");
pub const K_R: &str = include_str!("../../templates/k_r.txt");

pub const ALL_TEMPLATES: &[(&str, &str)] = &[
    ("reflect", REFLECT),
    ("extract", EXTRACT),
    ("infer_node", INFER_NODE),
    ("infer_direct", INFER_DIRECT),
    ("match", MATCH),
    ("act_g08a", ACT_G08A),
    ("act_sag", ACT_SAG),
    ("act_undercover_clue", ACT_UNDERCOVER_CLUE),
    ("act_undercover_vote", ACT_UNDERCOVER_VOTE),
    ("tot_candidate", TOT_CANDIDATE),
    ("tot_score", TOT_SCORE),
    ("reflexion_round", REFLEXION_ROUND),
    ("k_r", K_R),
];

/// Version declared on a template's first line.
pub fn template_version(template: &str) -> Option<u32> {
    template
        .lines()
        .next()?
        .strip_prefix("# template-version ")?
        .trim()
        .parse()
        .ok()
}

/// Fill `{name}` placeholders; the version header line is stripped. Empty
/// substitutions collapse their line so prompts stay tight.
pub fn render(template: &str, vars: &[(&str, &str)]) -> String {
    let body = match template.split_once('\n') {
        Some((first, rest)) if first.starts_with("# template-version") => rest,
        _ => template,
    };
    let mut out = body.to_string();
    for (name, value) in vars {
        out = out.replace(&format!("{{{name}}}"), value);
    }
    let cleaned: Vec<&str> = out.lines().filter(|l| !l.trim().is_empty()).collect();
    cleaned.join("\n")
}

/// Sorted `key = value` lines for an observation; the canonical way
/// observations appear inside prompts.
pub fn render_observation(observation: &Observation) -> String {
    observation
        .fields
        .iter()
        .map(|(k, v)| format!("{k} = {v}"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Short textual summary of recent reveal records, oldest first.
pub fn summarize_reveals(reveals: &[RevealRecord], limit: usize) -> String {
    let start = reveals.len().saturating_sub(limit);
    reveals[start..]
        .iter()
        .map(|r| {
            let fields = r
                .fields
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect::<Vec<_>>()
                .join(", ");
            format!("round {} {}: {}", r.round, r.phase.name(), fields)
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Ask the backend for a natural-language hypothesis about the opponent's
/// intermediate reasoning, given the round it just played.
pub fn reflect(
    history_summary: &str,
    observation: &Observation,
    actual_action: &Value,
    backend: &dyn Reasoner,
) -> Result<String, BackendError> {
    let prompt = render(
        REFLECT,
        &[
            ("history", history_summary),
            ("observation", &render_observation(observation)),
            ("action", actual_action.as_str()),
        ],
    );
    backend.complete(&BackendRequest::user(Purpose::Reflect, prompt))
}

/// Turn a reflection into validated causal chains. Malformed lines are
/// dropped with a logged reason; zero valid chains is a legal outcome.
/// Backend transport errors propagate so the caller can skip the update.
pub fn extract(
    reflection: &str,
    observation_keys: &[String],
    backend: &dyn Reasoner,
) -> Result<Vec<CausalChain>, BackendError> {
    let prompt = render(
        EXTRACT,
        &[
            ("keys", &observation_keys.join(", ")),
            ("reflection", reflection),
        ],
    );
    let response = backend.complete(&BackendRequest::user(Purpose::Extract, prompt))?;
    Ok(parse_chains(&response, observation_keys))
}

/// Grammar half of `extract`, separated so fuzz tests can hit it directly.
pub fn parse_chains(text: &str, observation_keys: &[String]) -> Vec<CausalChain> {
    let mut chains = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || !line.contains("->") {
            continue;
        }
        match CausalChain::parse_line(line, observation_keys) {
            Ok(chain) => chains.push(chain),
            Err(reason) => log::debug!("dropped chain line '{line}': {reason}"),
        }
    }
    chains
}
