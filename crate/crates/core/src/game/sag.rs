//! Survival Auction Game: a sealed-bid first-price auction for water. The
//! winner restores health, everyone else loses some, and players at zero
//! health are eliminated. The headline metric is survival rounds.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::GameError;
use crate::game::spec::SagParams;
use crate::game::state::{GameState, Phase, RoundOutcome};
use crate::types::{PlayerId, Value};

/// Resolve one auction round. `bids` maps each alive player to a sealed bid.
/// The unique highest bidder wins and pays its own bid; ties are broken by a
/// uniform draw from `tie_rng`. Only the winner identity and price are
/// revealed; losing bids stay private.
pub fn sag_step(
    bids: &BTreeMap<PlayerId, i64>,
    state: &GameState,
    params: &SagParams,
    tie_rng: &mut ChaCha8Rng,
) -> Result<RoundOutcome, GameError> {
    if state.terminal {
        return Err(GameError::Terminal);
    }
    let alive = state.alive_players();
    if alive.is_empty() {
        return Err(GameError::InvalidSpec("no alive players".into()));
    }
    for p in &alive {
        if !bids.contains_key(p) {
            return Err(GameError::InvalidAction {
                player: *p,
                reason: "alive player did not bid".into(),
            });
        }
    }
    for (p, &bid) in bids {
        let status = state
            .players
            .get(p.0)
            .ok_or(GameError::UnknownPlayer(*p))?;
        if !status.alive {
            return Err(GameError::InvalidAction {
                player: *p,
                reason: "eliminated player cannot bid".into(),
            });
        }
        let budget = status.budget.unwrap_or(0);
        if bid < 0 || bid > budget {
            return Err(GameError::InvalidAction {
                player: *p,
                reason: format!("bid {bid} outside [0, {budget}]"),
            });
        }
    }

    let high = *bids.values().max().expect("non-empty bids");
    let tied: Vec<PlayerId> = bids
        .iter()
        .filter(|(_, &b)| b == high)
        .map(|(p, _)| *p)
        .collect();
    let winner = if tied.len() == 1 {
        tied[0]
    } else {
        tied[tie_rng.gen_range(0..tied.len())]
    };
    let price = high;

    let mut outcome = RoundOutcome::new(state.players.len());
    outcome.phase = Phase::Act;
    outcome.winners.insert(winner);

    // Apply to a scratch copy of per-player hp/budget to compute the delta.
    let mut hp_after: Vec<i64> = state.players.iter().map(|p| p.hp.unwrap_or(0)).collect();
    let mut budget_after: Vec<i64> = state
        .players
        .iter()
        .map(|p| p.budget.unwrap_or(0))
        .collect();

    budget_after[winner.0] -= price;
    if params.full_restore {
        hp_after[winner.0] = params.hp_cap;
    } else {
        hp_after[winner.0] = (hp_after[winner.0] + 2 * params.round_hp_loss).min(params.hp_cap);
    }
    for p in &alive {
        if *p != winner {
            hp_after[p.0] -= params.round_hp_loss;
        }
    }

    let mut alive_after = 0usize;
    for p in &alive {
        if hp_after[p.0] <= 0 {
            hp_after[p.0] = 0;
            outcome.eliminated.push(*p);
        } else {
            alive_after += 1;
            outcome.rewards[p.0] = 1.0; // survival reward per round lived
        }
    }

    let mut reveal = BTreeMap::new();
    reveal.insert("winner".to_string(), Value::text(winner.to_string()));
    reveal.insert("price".to_string(), Value::number(price as f64));
    for (i, status) in state.players.iter().enumerate() {
        if status.alive {
            reveal.insert(format!("hp-p{i}"), Value::number(hp_after[i] as f64));
        }
        reveal.insert(
            format!("alive-p{i}"),
            Value::text(if status.alive && hp_after[i] > 0 {
                "yes"
            } else {
                "no"
            }),
        );
    }
    outcome.reveal = reveal;
    outcome.terminal = alive_after <= 1;

    // Stash the post-round numbers for the engine to apply.
    outcome.reveal.insert(
        "eliminated".to_string(),
        Value::text(
            outcome
                .eliminated
                .iter()
                .map(|p| p.to_string())
                .collect::<Vec<_>>()
                .join(" "),
        ),
    );
    Ok(outcome)
}

/// Mutate `state` according to a resolved auction outcome.
pub fn apply_sag_outcome(
    state: &mut GameState,
    outcome: &RoundOutcome,
    bids: &BTreeMap<PlayerId, i64>,
    params: &SagParams,
) {
    let winner = *outcome.winners.iter().next().expect("auction has a winner");
    let price = bids[&winner];
    let alive = state.alive_players();
    {
        let w = &mut state.players[winner.0];
        *w.budget.get_or_insert(0) -= price;
        let hp = w.hp.get_or_insert(0);
        if params.full_restore {
            *hp = params.hp_cap;
        } else {
            *hp = (*hp + 2 * params.round_hp_loss).min(params.hp_cap);
        }
    }
    for p in alive {
        if p != winner {
            let hp = state.players[p.0].hp.get_or_insert(0);
            *hp -= params.round_hp_loss;
            if *hp <= 0 {
                *hp = 0;
            }
        }
    }
    for p in &outcome.eliminated {
        state.players[p.0].alive = false;
        state.eliminated_round[p.0] = Some(state.round);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn fresh_state(n: usize, params: &SagParams) -> GameState {
        use crate::game::state::PlayerStatus;
        GameState {
            round: 0,
            phase: Phase::Act,
            terminal: false,
            players: (0..n)
                .map(|_| PlayerStatus {
                    alive: true,
                    hp: Some(params.initial_hp),
                    budget: Some(params.initial_budget),
                    word: None,
                    role: None,
                })
                .collect(),
            reveals: Vec::new(),
            eliminated_round: vec![None; n],
        }
    }

    fn bids(values: &[i64]) -> BTreeMap<PlayerId, i64> {
        values
            .iter()
            .enumerate()
            .map(|(i, &b)| (PlayerId(i), b))
            .collect()
    }

    #[test]
    fn highest_bidder_wins_and_pays_own_bid() {
        let params = SagParams::default();
        let mut state = fresh_state(3, &params);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = bids(&[10, 20, 15]);
        let out = sag_step(&b, &state, &params, &mut rng).unwrap();
        assert!(out.winners.contains(&PlayerId(1)));
        assert_eq!(out.reveal["price"], Value::text("20"));
        apply_sag_outcome(&mut state, &out, &b, &params);
        assert_eq!(state.players[1].budget, Some(80));
        let hp: Vec<i64> = state.players.iter().map(|p| p.hp.unwrap()).collect();
        assert_eq!(hp, vec![8, 10, 8]);
    }

    #[test]
    fn all_zero_bids_still_produce_one_winner() {
        let params = SagParams::default();
        let mut state = fresh_state(2, &params);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let b = bids(&[0, 0]);
        let out = sag_step(&b, &state, &params, &mut rng).unwrap();
        assert_eq!(out.winners.len(), 1);
        let winner = *out.winners.iter().next().unwrap();
        apply_sag_outcome(&mut state, &out, &b, &params);
        let loser = PlayerId(1 - winner.0);
        assert_eq!(state.players[loser.0].hp, Some(8));
        assert_eq!(state.players[winner.0].hp, Some(10));
    }

    #[test]
    fn singleton_auction_is_terminal() {
        let params = SagParams::default();
        let mut state = fresh_state(2, &params);
        state.players[1].alive = false;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b: BTreeMap<PlayerId, i64> = [(PlayerId(0), 5)].into_iter().collect();
        let out = sag_step(&b, &state, &params, &mut rng).unwrap();
        assert!(out.winners.contains(&PlayerId(0)));
        assert!(out.terminal);
        apply_sag_outcome(&mut state, &out, &b, &params);
        assert_eq!(state.players[0].budget, Some(95));
    }

    #[test]
    fn bid_over_budget_rejected() {
        let params = SagParams::default();
        let mut state = fresh_state(2, &params);
        state.players[0].budget = Some(5);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let err = sag_step(&bids(&[6, 1]), &state, &params, &mut rng).unwrap_err();
        match err {
            GameError::InvalidAction { player, .. } => assert_eq!(player, PlayerId(0)),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn losing_bids_stay_private() {
        let params = SagParams::default();
        let state = fresh_state(3, &params);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let out = sag_step(&bids(&[13, 20, 17]), &state, &params, &mut rng).unwrap();
        let rendered = serde_json::to_string(&out.reveal).unwrap();
        assert!(!rendered.contains("13"));
        assert!(!rendered.contains("17"));
        assert!(rendered.contains("20"));
    }
}
