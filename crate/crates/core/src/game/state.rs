//! Shared state, observation and trajectory types for all three games.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::types::{Action, PlayerId, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    /// Simultaneous numeric action (G0.8A choice, SAG bid).
    Act,
    /// Undercover clue phase.
    Clue,
    /// Undercover vote phase.
    Vote,
}

impl Phase {
    pub fn name(&self) -> &'static str {
        match self {
            Phase::Act => "act",
            Phase::Clue => "clue",
            Phase::Vote => "vote",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Civilian,
    Undercover,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlayerStatus {
    pub alive: bool,
    pub hp: Option<i64>,
    pub budget: Option<i64>,
    pub word: Option<String>,
    pub role: Option<Role>,
}

impl PlayerStatus {
    pub fn blank() -> Self {
        PlayerStatus {
            alive: true,
            hp: None,
            budget: None,
            word: None,
            role: None,
        }
    }
}

/// One public reveal record: the quantities disclosed to every player after a
/// phase resolves. Private values (sealed losing bids, words, roles) never
/// appear here.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RevealRecord {
    pub round: u32,
    pub phase: Phase,
    pub fields: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GameState {
    pub round: u32,
    pub phase: Phase,
    pub terminal: bool,
    pub players: Vec<PlayerStatus>,
    /// Public record of past rounds, revealed quantities only.
    pub reveals: Vec<RevealRecord>,
    /// Round at which each player was eliminated, if any. Eliminations are
    /// public events in every game here.
    pub eliminated_round: Vec<Option<u32>>,
}

impl GameState {
    pub fn alive_players(&self) -> Vec<PlayerId> {
        self.players
            .iter()
            .enumerate()
            .filter(|(_, p)| p.alive)
            .map(|(i, _)| PlayerId(i))
            .collect()
    }

    pub fn alive_count(&self) -> usize {
        self.players.iter().filter(|p| p.alive).count()
    }

    pub fn last_reveal(&self) -> Option<&RevealRecord> {
        self.reveals.last()
    }
}

/// Per-agent partial view of the state: the public record plus the agent's
/// own private fields. Never contains another player's private data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Observation {
    pub observer: PlayerId,
    pub round: u32,
    pub phase: Phase,
    pub fields: BTreeMap<String, Value>,
}

impl Observation {
    pub fn get(&self, key: &str) -> Option<&Value> {
        self.fields.get(key)
    }

    pub fn get_or_none(&self, key: &str) -> Value {
        self.fields.get(key).cloned().unwrap_or_else(Value::none)
    }

    /// Stable short digest of the full observation, for round logs.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        hasher.update(self.observer.to_string().as_bytes());
        hasher.update([self.round as u8, self.phase as u8]);
        for (k, v) in &self.fields {
            hasher.update(k.as_bytes());
            hasher.update([0]);
            hasher.update(v.as_str().as_bytes());
            hasher.update([1]);
        }
        let out = hasher.finalize();
        out.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// Outcome of one resolved phase: rewards, winners, public reveal and the
/// state delta (eliminations) it applied.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundOutcome {
    pub round: u32,
    pub phase: Phase,
    pub rewards: Vec<f64>,
    pub winners: BTreeSet<PlayerId>,
    pub reveal: BTreeMap<String, Value>,
    pub eliminated: Vec<PlayerId>,
    pub terminal: bool,
}

impl RoundOutcome {
    pub fn new(players: usize) -> Self {
        RoundOutcome {
            round: 0,
            phase: Phase::Act,
            rewards: vec![0.0; players],
            winners: BTreeSet::new(),
            reveal: BTreeMap::new(),
            eliminated: Vec::new(),
            terminal: false,
        }
    }
}

/// One (observation, own action, reward) triple in an agent's local history.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryStep {
    /// Logical timestamp; strictly increasing within a trajectory.
    pub timestamp: u64,
    pub observation: Observation,
    pub action: Action,
    pub reward: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Trajectory {
    pub steps: Vec<TrajectoryStep>,
}

impl Trajectory {
    pub fn push(&mut self, observation: Observation, action: Action, reward: f64) {
        let timestamp = self.steps.len() as u64;
        self.steps.push(TrajectoryStep {
            timestamp,
            observation,
            action,
            reward,
        });
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Discounted return over a trajectory: sum over steps of discount^t * r_t.
pub fn episode_return(trajectory: &Trajectory, discount: f64) -> f64 {
    trajectory
        .steps
        .iter()
        .enumerate()
        .map(|(t, step)| discount.powi(t as i32) * step.reward)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::spec::GameSpec;
    use crate::game::GameEngine;

    fn traj(rewards: &[f64]) -> Trajectory {
        let spec = GameSpec::g08a(2, 10, 0);
        let engine = GameEngine::new(&spec, 0).unwrap();
        let mut t = Trajectory::default();
        for &r in rewards {
            let obs = engine.observation_for(PlayerId(0)).unwrap();
            t.push(obs, Action::Number(1), r);
        }
        t
    }

    #[test]
    fn episode_return_undiscounted() {
        assert_eq!(episode_return(&traj(&[1.0, 0.0, 1.0]), 1.0), 2.0);
    }

    #[test]
    fn episode_return_discounted() {
        assert_eq!(episode_return(&traj(&[1.0, 1.0]), 0.5), 1.5);
    }

    #[test]
    fn episode_return_empty() {
        assert_eq!(episode_return(&Trajectory::default(), 1.0), 0.0);
    }

    #[test]
    fn timestamps_strictly_increase() {
        let t = traj(&[0.0, 1.0, 0.5]);
        for pair in t.steps.windows(2) {
            assert!(pair[0].timestamp < pair[1].timestamp);
        }
    }
}
