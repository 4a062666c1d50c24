//! G0.8A: players pick integers and the pick closest to 0.8 x the group
//! average wins the round. Winners share a unit reward.

use std::collections::BTreeMap;

use crate::error::GameError;
use crate::game::spec::G08AParams;
use crate::game::state::{Phase, RoundOutcome};
use crate::types::{PlayerId, Value};

/// Resolve one G0.8A round. `choices` holds one choice per alive player,
/// indexed by seat. The target is real-valued, never rounded.
pub fn g08a_step(choices: &[i64], params: &G08AParams) -> Result<RoundOutcome, GameError> {
    if choices.is_empty() {
        return Err(GameError::InvalidSpec("no choices submitted".into()));
    }
    for (i, &c) in choices.iter().enumerate() {
        if c < params.action_min || c > params.action_max {
            return Err(GameError::InvalidAction {
                player: PlayerId(i),
                reason: format!(
                    "choice {c} outside [{}, {}]",
                    params.action_min, params.action_max
                ),
            });
        }
    }

    let mean = choices.iter().map(|&c| c as f64).sum::<f64>() / choices.len() as f64;
    let target = params.target_factor * mean;

    let distances: Vec<f64> = choices.iter().map(|&c| (c as f64 - target).abs()).collect();
    let best = distances.iter().cloned().fold(f64::INFINITY, f64::min);
    let winners: Vec<usize> = distances
        .iter()
        .enumerate()
        .filter(|(_, &d)| d == best)
        .map(|(i, _)| i)
        .collect();

    let mut outcome = RoundOutcome::new(choices.len());
    let share = 1.0 / winners.len() as f64;
    for &w in &winners {
        outcome.rewards[w] = share;
        outcome.winners.insert(PlayerId(w));
    }

    let mut reveal = BTreeMap::new();
    reveal.insert("target".to_string(), Value::number(target));
    for (i, &c) in choices.iter().enumerate() {
        reveal.insert(format!("choice-p{i}"), Value::number(c as f64));
    }
    reveal.insert(
        "winners".to_string(),
        Value::text(
            winners
                .iter()
                .map(|w| format!("p{w}"))
                .collect::<Vec<_>>()
                .join(" "),
        ),
    );
    outcome.reveal = reveal;
    outcome.phase = Phase::Act;
    Ok(outcome)
}
