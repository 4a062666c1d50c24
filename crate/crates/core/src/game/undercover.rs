//! Undercover: a social deduction game. Players hold secret words (Civilians
//! share one word, Undercovers another), give clues, then vote to eliminate.
//! Civilians win once every Undercover is out; Undercovers win at parity or
//! when the clue rounds run out with an Undercover still alive.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::GameError;
use crate::game::spec::UndercoverParams;
use crate::game::state::{GameState, Phase, Role, RoundOutcome};
use crate::types::{PlayerId, Value};

#[derive(Debug, Clone)]
pub enum UndercoverInput {
    Clues(BTreeMap<PlayerId, String>),
    Votes(BTreeMap<PlayerId, PlayerId>),
}

pub fn undercover_step(
    input: &UndercoverInput,
    state: &GameState,
    params: &UndercoverParams,
    tie_rng: &mut ChaCha8Rng,
) -> Result<RoundOutcome, GameError> {
    if state.terminal {
        return Err(GameError::Terminal);
    }
    match input {
        UndercoverInput::Clues(clues) => clue_step(clues, state),
        UndercoverInput::Votes(votes) => vote_step(votes, state, params, tie_rng),
    }
}

fn check_one_per_alive<T>(
    entries: &BTreeMap<PlayerId, T>,
    state: &GameState,
) -> Result<(), GameError> {
    for p in state.alive_players() {
        if !entries.contains_key(&p) {
            return Err(GameError::InvalidAction {
                player: p,
                reason: "alive player submitted nothing".into(),
            });
        }
    }
    for p in entries.keys() {
        let status = state
            .players
            .get(p.0)
            .ok_or(GameError::UnknownPlayer(*p))?;
        if !status.alive {
            return Err(GameError::InvalidAction {
                player: *p,
                reason: "eliminated player cannot act".into(),
            });
        }
    }
    Ok(())
}

fn clue_step(
    clues: &BTreeMap<PlayerId, String>,
    state: &GameState,
) -> Result<RoundOutcome, GameError> {
    if state.phase != Phase::Clue {
        return Err(GameError::WrongActionKind {
            game: "undercover".into(),
            expected: format!("{} phase input", state.phase.name()),
        });
    }
    check_one_per_alive(clues, state)?;
    let mut outcome = RoundOutcome::new(state.players.len());
    outcome.round = state.round;
    outcome.phase = Phase::Clue;
    for (p, clue) in clues {
        outcome
            .reveal
            .insert(format!("clue-{p}"), Value::text(clue.clone()));
    }
    Ok(outcome)
}

fn vote_step(
    votes: &BTreeMap<PlayerId, PlayerId>,
    state: &GameState,
    params: &UndercoverParams,
    tie_rng: &mut ChaCha8Rng,
) -> Result<RoundOutcome, GameError> {
    if state.phase != Phase::Vote {
        return Err(GameError::WrongActionKind {
            game: "undercover".into(),
            expected: format!("{} phase input", state.phase.name()),
        });
    }
    check_one_per_alive(votes, state)?;
    for (voter, target) in votes {
        let valid = state
            .players
            .get(target.0)
            .map(|t| t.alive && target != voter)
            .unwrap_or(false);
        if !valid {
            return Err(GameError::InvalidAction {
                player: *voter,
                reason: format!("invalid vote target {target}"),
            });
        }
    }

    let mut tally: BTreeMap<PlayerId, usize> = BTreeMap::new();
    for target in votes.values() {
        *tally.entry(*target).or_insert(0) += 1;
    }
    let top = *tally.values().max().expect("non-empty votes");
    let tied: Vec<PlayerId> = tally
        .iter()
        .filter(|(_, &n)| n == top)
        .map(|(p, _)| *p)
        .collect();
    let eliminated = if tied.len() == 1 {
        tied[0]
    } else {
        tied[tie_rng.gen_range(0..tied.len())]
    };

    let mut outcome = RoundOutcome::new(state.players.len());
    outcome.round = state.round;
    outcome.phase = Phase::Vote;
    outcome.eliminated.push(eliminated);
    for (voter, target) in votes {
        outcome
            .reveal
            .insert(format!("vote-{voter}"), Value::text(target.to_string()));
    }
    outcome
        .reveal
        .insert("eliminated".into(), Value::text(eliminated.to_string()));

    // Faction counts after the elimination.
    let mut undercover_alive = 0usize;
    let mut civilian_alive = 0usize;
    for (i, p) in state.players.iter().enumerate() {
        if !p.alive || PlayerId(i) == eliminated {
            continue;
        }
        match p.role {
            Some(Role::Undercover) => undercover_alive += 1,
            _ => civilian_alive += 1,
        }
    }
    let last_round = state.round + 1 >= params.max_clue_rounds;
    let winner_role = if undercover_alive == 0 {
        Some(Role::Civilian)
    } else if undercover_alive >= civilian_alive || last_round {
        Some(Role::Undercover)
    } else {
        None
    };
    if let Some(role) = winner_role {
        outcome.terminal = true;
        let members: Vec<PlayerId> = state
            .players
            .iter()
            .enumerate()
            .filter(|(_, p)| p.role == Some(role))
            .map(|(i, _)| PlayerId(i))
            .collect();
        let share = 1.0 / members.len() as f64;
        for m in members {
            outcome.winners.insert(m);
            outcome.rewards[m.0] = share;
        }
        outcome.reveal.insert(
            "winning-faction".into(),
            Value::text(match role {
                Role::Civilian => "civilians",
                Role::Undercover => "undercovers",
            }),
        );
    }
    Ok(outcome)
}

/// Mutate `state` according to a resolved undercover phase.
pub fn apply_undercover_outcome(state: &mut GameState, outcome: &RoundOutcome) {
    match outcome.phase {
        Phase::Clue => state.phase = Phase::Vote,
        Phase::Vote => {
            for p in &outcome.eliminated {
                state.players[p.0].alive = false;
                state.eliminated_round[p.0] = Some(state.round);
            }
            state.phase = Phase::Clue;
        }
        Phase::Act => {}
    }
}
