//! Deterministic rule-driven opponents. These are the learnability oracles:
//! their behavior is a known closed-form function of the observation, so an
//! opponent model that converges on them is verifiably correct.

use crate::game::state::{Observation, Phase};
use crate::types::{Action, PlayerId, Value};

#[derive(Debug, Clone, PartialEq)]
pub enum ScriptedRuleId {
    /// Choose round(0.8 x last target), 50 on the first round.
    G08aFollowTarget,
    /// Always choose the same number.
    G08aConstant(i64),
    /// Bid floor(budget / 2).
    SagHalfBudget,
    /// Bid the whole budget when hp <= round loss, else 0.
    SagUrgent,
    /// Generic word-free clues; votes for the next alive seat.
    UndercoverSimple,
}

impl ScriptedRuleId {
    pub fn parse(id: &str) -> Option<ScriptedRuleId> {
        if let Some(rest) = id.strip_prefix("g08a-constant-") {
            return rest.parse().ok().map(ScriptedRuleId::G08aConstant);
        }
        match id {
            "g08a-follow-target" => Some(ScriptedRuleId::G08aFollowTarget),
            "sag-half-budget" => Some(ScriptedRuleId::SagHalfBudget),
            "sag-urgent" => Some(ScriptedRuleId::SagUrgent),
            "undercover-simple" => Some(ScriptedRuleId::UndercoverSimple),
            _ => None,
        }
    }

    pub fn name(&self) -> String {
        match self {
            ScriptedRuleId::G08aFollowTarget => "g08a-follow-target".into(),
            ScriptedRuleId::G08aConstant(c) => format!("g08a-constant-{c}"),
            ScriptedRuleId::SagHalfBudget => "sag-half-budget".into(),
            ScriptedRuleId::SagUrgent => "sag-urgent".into(),
            ScriptedRuleId::UndercoverSimple => "undercover-simple".into(),
        }
    }
}

fn numeric(observation: &Observation, key: &str) -> Option<f64> {
    observation.get(key).and_then(Value::as_number)
}

/// Evaluate a scripted rule on an observation.
pub fn scripted_opponent(rule: &ScriptedRuleId, observation: &Observation) -> Action {
    match rule {
        ScriptedRuleId::G08aFollowTarget => {
            let choice = match numeric(observation, "last-target") {
                Some(target) => (0.8 * target).round() as i64,
                None => 50,
            };
            Action::Number(choice.clamp(1, 100))
        }
        ScriptedRuleId::G08aConstant(c) => Action::Number(*c),
        ScriptedRuleId::SagHalfBudget => {
            let budget = numeric(observation, "own-budget").unwrap_or(0.0) as i64;
            Action::Number(budget / 2)
        }
        ScriptedRuleId::SagUrgent => {
            let budget = numeric(observation, "own-budget").unwrap_or(0.0) as i64;
            let hp = numeric(observation, "own-hp").unwrap_or(0.0);
            let loss = numeric(observation, "round-hp-loss").unwrap_or(2.0);
            if hp <= loss {
                Action::Number(budget)
            } else {
                Action::Number(0)
            }
        }
        ScriptedRuleId::UndercoverSimple => match observation.phase {
            Phase::Clue => {
                let word_len = observation
                    .get("own-word")
                    .map(|w| w.as_str().len())
                    .unwrap_or(0);
                Action::Clue(format!(
                    "a {word_len}-letter thing, round {}",
                    observation.round
                ))
            }
            _ => {
                // next alive seat after self, wrapping
                let me = observation.observer.0;
                let n = numeric(observation, "players").unwrap_or(2.0) as usize;
                for offset in 1..n {
                    let candidate = (me + offset) % n;
                    let alive = observation
                        .get(&format!("alive-p{candidate}"))
                        .map(|v| v.as_str() == "yes")
                        .unwrap_or(false);
                    if alive {
                        return Action::Vote(PlayerId(candidate));
                    }
                }
                Action::Vote(PlayerId((me + 1) % n))
            }
        },
    }
}
