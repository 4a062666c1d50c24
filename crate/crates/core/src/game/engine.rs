//! Single-writer engine wrapping one episode of any supported game: builds
//! observations, validates and clamps actions, resolves steps and applies
//! outcomes to the state.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::GameError;
use crate::game::g08a::g08a_step;
use crate::game::sag::{apply_sag_outcome, sag_step};
use crate::game::spec::{GameKind, GameSpec};
use crate::game::state::{
    GameState, Observation, Phase, PlayerStatus, RevealRecord, Role, RoundOutcome,
};
use crate::game::undercover::{apply_undercover_outcome, undercover_step, UndercoverInput};
use crate::types::{derive_seed, Action, PlayerId, Value};

/// A recorded substitution of an illegal action. Episodes keep going; the
/// violation is logged instead of aborting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Violation {
    pub round: u32,
    pub phase: Phase,
    pub player: PlayerId,
    pub reason: String,
    pub submitted: String,
    pub substituted: String,
}

/// Post-round information released to one agent: the public reveal plus the
/// opponent actions that this game makes observable.
#[derive(Debug, Clone)]
pub struct RoundReveal {
    pub round: u32,
    pub phase: Phase,
    pub revealed_actions: BTreeMap<PlayerId, Value>,
    pub public: BTreeMap<String, Value>,
    pub own_reward: f64,
    pub terminal: bool,
}

pub struct GameEngine {
    pub spec: GameSpec,
    pub state: GameState,
    episode_seed: u64,
}

impl GameEngine {
    pub fn new(spec: &GameSpec, episode_seed: u64) -> Result<Self, GameError> {
        spec.validate()?;
        let n = spec.players;
        let mut players: Vec<PlayerStatus> = (0..n).map(|_| PlayerStatus::blank()).collect();
        let mut phase = Phase::Act;
        match spec.kind {
            GameKind::G08a => {}
            GameKind::Sag => {
                let p = spec.params.sag();
                for status in &mut players {
                    status.hp = Some(p.initial_hp);
                    status.budget = Some(p.initial_budget);
                }
            }
            GameKind::Undercover => {
                phase = Phase::Clue;
                let p = spec.params.undercover();
                let mut rng =
                    ChaCha8Rng::seed_from_u64(derive_seed(episode_seed, 0xad01, 0));
                let (civ_word, und_word) = p.word_pairs[rng.gen_range(0..p.word_pairs.len())].clone();
                let mut seats: Vec<usize> = (0..n).collect();
                seats.shuffle(&mut rng);
                let undercover_seats = &seats[..p.num_undercover];
                for (i, status) in players.iter_mut().enumerate() {
                    if undercover_seats.contains(&i) {
                        status.role = Some(Role::Undercover);
                        status.word = Some(und_word.clone());
                    } else {
                        status.role = Some(Role::Civilian);
                        status.word = Some(civ_word.clone());
                    }
                }
            }
        }
        Ok(GameEngine {
            spec: spec.clone(),
            state: GameState {
                round: 0,
                phase,
                terminal: false,
                players,
                reveals: Vec::new(),
                eliminated_round: vec![None; n],
            },
            episode_seed,
        })
    }

    pub fn is_terminal(&self) -> bool {
        self.state.terminal
    }

    pub fn alive(&self) -> Vec<PlayerId> {
        self.state.alive_players()
    }

    /// Bounds of the numeric action space for the current phase, if numeric.
    pub fn numeric_action_range(&self, seat: PlayerId) -> Option<(i64, i64)> {
        match self.spec.kind {
            GameKind::G08a => {
                let p = self.spec.params.g08a();
                Some((p.action_min, p.action_max))
            }
            GameKind::Sag => {
                let budget = self.state.players[seat.0].budget.unwrap_or(0);
                Some((0, budget))
            }
            GameKind::Undercover => None,
        }
    }

    fn tie_rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(derive_seed(
            self.episode_seed,
            self.state.round as u64,
            self.state.phase as u64,
        ))
    }

    /// Clamp an illegal action to a legal one, reporting the substitution.
    /// This is the caller-side companion of the step functions' strict
    /// validation: LLM backends emit malformed actions and episodes must
    /// still complete.
    pub fn sanitize(&self, seat: PlayerId, action: Action) -> (Action, Option<Violation>) {
        let violation = |reason: String, submitted: &Action, substituted: &Action| Violation {
            round: self.state.round,
            phase: self.state.phase,
            player: seat,
            reason,
            submitted: format!("{submitted:?}"),
            substituted: format!("{substituted:?}"),
        };
        match (self.spec.kind, self.state.phase) {
            (GameKind::G08a, _) => {
                let p = self.spec.params.g08a();
                match action {
                    Action::Number(n) if n >= p.action_min && n <= p.action_max => {
                        (Action::Number(n), None)
                    }
                    Action::Number(n) => {
                        let fixed = Action::Number(n.clamp(p.action_min, p.action_max));
                        let v = violation(format!("choice {n} out of range"), &action, &fixed);
                        (fixed, Some(v))
                    }
                    other => {
                        let fixed = Action::Number(p.action_min);
                        let v = violation("non-numeric choice".into(), &other, &fixed);
                        (fixed, Some(v))
                    }
                }
            }
            (GameKind::Sag, _) => {
                let budget = self.state.players[seat.0].budget.unwrap_or(0);
                match action {
                    Action::Number(n) if n >= 0 && n <= budget => (Action::Number(n), None),
                    Action::Number(n) => {
                        let fixed = Action::Number(n.clamp(0, budget));
                        let v = violation(format!("bid {n} outside [0, {budget}]"), &action, &fixed);
                        (fixed, Some(v))
                    }
                    other => {
                        let fixed = Action::Number(0);
                        let v = violation("non-numeric bid".into(), &other, &fixed);
                        (fixed, Some(v))
                    }
                }
            }
            (GameKind::Undercover, Phase::Clue) => match action {
                Action::Clue(text) => (Action::Clue(text), None),
                other => {
                    let fixed = Action::Clue(String::new());
                    let v = violation("expected a clue".into(), &other, &fixed);
                    (fixed, Some(v))
                }
            },
            (GameKind::Undercover, _) => {
                let valid_target = |t: &PlayerId| {
                    t.0 < self.state.players.len() && self.state.players[t.0].alive && *t != seat
                };
                match action {
                    Action::Vote(t) if valid_target(&t) => (Action::Vote(t), None),
                    other => {
                        // seeded substitute among valid targets
                        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                            self.episode_seed,
                            self.state.round as u64,
                            0x50b + seat.0 as u64,
                        ));
                        let candidates: Vec<PlayerId> = self
                            .alive()
                            .into_iter()
                            .filter(|p| *p != seat)
                            .collect();
                        let fixed =
                            Action::Vote(candidates[rng.gen_range(0..candidates.len())]);
                        let v = violation("invalid vote target".into(), &other, &fixed);
                        (fixed, Some(v))
                    }
                }
            }
        }
    }

    /// Resolve one phase with already-sanitized actions from every alive
    /// player, apply the outcome to the state and append the public reveal.
    pub fn step(
        &mut self,
        actions: &BTreeMap<PlayerId, Action>,
    ) -> Result<RoundOutcome, GameError> {
        if self.state.terminal {
            return Err(GameError::Terminal);
        }
        if self.state.round >= self.spec.horizon {
            return Err(GameError::Terminal);
        }
        let mut tie_rng = self.tie_rng();
        let mut outcome = match self.spec.kind {
            GameKind::G08a => {
                let choices = self.numeric_actions(actions)?;
                let values: Vec<i64> = choices.values().copied().collect();
                let out = g08a_step(&values, self.spec.params.g08a())?;
                out
            }
            GameKind::Sag => {
                let bids = self.numeric_actions(actions)?;
                let params = self.spec.params.sag().clone();
                let out = sag_step(&bids, &self.state, &params, &mut tie_rng)?;
                apply_sag_outcome(&mut self.state, &out, &bids, &params);
                out
            }
            GameKind::Undercover => {
                let input = self.undercover_input(actions)?;
                let params = self.spec.params.undercover().clone();
                let out = undercover_step(&input, &self.state, &params, &mut tie_rng)?;
                apply_undercover_outcome(&mut self.state, &out);
                out
            }
        };
        outcome.round = self.state.round;
        outcome.phase = match self.spec.kind {
            GameKind::Undercover => outcome.phase,
            _ => Phase::Act,
        };
        self.state.reveals.push(RevealRecord {
            round: outcome.round,
            phase: outcome.phase,
            fields: outcome.reveal.clone(),
        });
        // Round advances after Act (g08a/sag) and after the Vote phase.
        let round_done = !matches!(outcome.phase, Phase::Clue);
        if round_done {
            self.state.round += 1;
        }
        if outcome.terminal || self.state.round >= self.spec.horizon {
            outcome.terminal = true;
            self.state.terminal = true;
        }
        Ok(outcome)
    }

    fn numeric_actions(
        &self,
        actions: &BTreeMap<PlayerId, Action>,
    ) -> Result<BTreeMap<PlayerId, i64>, GameError> {
        let mut out = BTreeMap::new();
        for (p, a) in actions {
            match a {
                Action::Number(n) => {
                    out.insert(*p, *n);
                }
                _ => {
                    return Err(GameError::WrongActionKind {
                        game: self.spec.kind.name().into(),
                        expected: "numeric action".into(),
                    })
                }
            }
        }
        Ok(out)
    }

    fn undercover_input(
        &self,
        actions: &BTreeMap<PlayerId, Action>,
    ) -> Result<UndercoverInput, GameError> {
        match self.state.phase {
            Phase::Clue => {
                let mut clues = BTreeMap::new();
                for (p, a) in actions {
                    match a {
                        Action::Clue(text) => {
                            clues.insert(*p, text.clone());
                        }
                        _ => {
                            return Err(GameError::WrongActionKind {
                                game: "undercover".into(),
                                expected: "clue".into(),
                            })
                        }
                    }
                }
                Ok(UndercoverInput::Clues(clues))
            }
            _ => {
                let mut votes = BTreeMap::new();
                for (p, a) in actions {
                    match a {
                        Action::Vote(t) => {
                            votes.insert(*p, *t);
                        }
                        _ => {
                            return Err(GameError::WrongActionKind {
                                game: "undercover".into(),
                                expected: "vote".into(),
                            })
                        }
                    }
                }
                Ok(UndercoverInput::Votes(votes))
            }
        }
    }

    /// Build the partial view for one agent: exactly the public record plus
    /// that agent's private fields. Deterministic in (agent, state).
    pub fn observation_for(&self, agent: PlayerId) -> Result<Observation, GameError> {
        if agent.0 >= self.spec.players {
            return Err(GameError::UnknownPlayer(agent));
        }
        let mut fields = BTreeMap::new();
        fields.insert("round".into(), Value::number(self.state.round as f64));
        fields.insert(
            "players".into(),
            Value::number(self.spec.players as f64),
        );
        match self.spec.kind {
            GameKind::G08a => {
                if let Some(last) = self.state.last_reveal() {
                    fields.insert(
                        "last-target".into(),
                        last.fields.get("target").cloned().unwrap_or_else(Value::none),
                    );
                    for i in 0..self.spec.players {
                        let key = format!("choice-p{i}");
                        if let Some(v) = last.fields.get(&key) {
                            fields.insert(format!("last-choice-p{i}"), v.clone());
                        }
                    }
                    if let Some(own) = last.fields.get(&format!("choice-p{}", agent.0)) {
                        fields.insert("own-last-choice".into(), own.clone());
                    }
                }
            }
            GameKind::Sag => {
                let status = &self.state.players[agent.0];
                // game rules are common knowledge
                fields.insert(
                    "round-hp-loss".into(),
                    Value::number(self.spec.params.sag().round_hp_loss as f64),
                );
                fields.insert(
                    "own-hp".into(),
                    Value::number(status.hp.unwrap_or(0) as f64),
                );
                fields.insert(
                    "own-budget".into(),
                    Value::number(status.budget.unwrap_or(0) as f64),
                );
                for (i, p) in self.state.players.iter().enumerate() {
                    fields.insert(
                        format!("alive-p{i}"),
                        Value::text(if p.alive { "yes" } else { "no" }),
                    );
                    if p.alive {
                        // hp is publicly derivable from the reveal history
                        fields.insert(format!("hp-p{i}"), Value::number(p.hp.unwrap_or(0) as f64));
                    }
                }
                if let Some(last) = self.state.last_reveal() {
                    fields.insert(
                        "last-winner".into(),
                        last.fields.get("winner").cloned().unwrap_or_else(Value::none),
                    );
                    fields.insert(
                        "last-price".into(),
                        last.fields.get("price").cloned().unwrap_or_else(Value::none),
                    );
                }
            }
            GameKind::Undercover => {
                let status = &self.state.players[agent.0];
                fields.insert("phase".into(), Value::text(self.state.phase.name()));
                fields.insert(
                    "own-word".into(),
                    Value::text(status.word.clone().unwrap_or_default()),
                );
                for (i, p) in self.state.players.iter().enumerate() {
                    fields.insert(
                        format!("alive-p{i}"),
                        Value::text(if p.alive { "yes" } else { "no" }),
                    );
                }
                for record in &self.state.reveals {
                    for (k, v) in &record.fields {
                        if k.starts_with("clue-") || k.starts_with("vote-") {
                            fields.insert(format!("r{}-{}", record.round, k), v.clone());
                        }
                    }
                    if let Some(e) = record.fields.get("eliminated") {
                        fields.insert("last-eliminated".into(), e.clone());
                    }
                }
            }
        }
        Ok(Observation {
            observer: agent,
            round: self.state.round,
            phase: self.state.phase,
            fields,
        })
    }

    /// Per-agent post-step reveal: which opponent actions become observable.
    /// G0.8A discloses all choices, SAG only the winning bid, Undercover all
    /// clues and votes.
    pub fn reveal_for(
        &self,
        agent: PlayerId,
        outcome: &RoundOutcome,
        actions: &BTreeMap<PlayerId, Action>,
    ) -> RoundReveal {
        let mut revealed_actions = BTreeMap::new();
        match self.spec.kind {
            GameKind::G08a => {
                for (p, a) in actions {
                    revealed_actions.insert(*p, a.to_value());
                }
            }
            GameKind::Sag => {
                if let Some(winner) = outcome.winners.iter().next() {
                    if let Some(a) = actions.get(winner) {
                        revealed_actions.insert(*winner, a.to_value());
                    }
                }
            }
            GameKind::Undercover => {
                for (p, a) in actions {
                    revealed_actions.insert(*p, a.to_value());
                }
            }
        }
        RoundReveal {
            round: outcome.round,
            phase: outcome.phase,
            revealed_actions,
            public: outcome.reveal.clone(),
            own_reward: outcome.rewards.get(agent.0).copied().unwrap_or(0.0),
            terminal: outcome.terminal,
        }
    }
}
