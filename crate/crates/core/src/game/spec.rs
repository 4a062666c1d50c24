//! Game specifications and per-game parameter blocks, loadable from TOML.

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, GameError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GameKind {
    G08a,
    Sag,
    Undercover,
}

impl GameKind {
    pub fn name(&self) -> &'static str {
        match self {
            GameKind::G08a => "g08a",
            GameKind::Sag => "sag",
            GameKind::Undercover => "undercover",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct G08AParams {
    pub action_min: i64,
    pub action_max: i64,
    pub target_factor: f64,
}

impl Default for G08AParams {
    fn default() -> Self {
        G08AParams {
            action_min: 1,
            action_max: 100,
            target_factor: 0.8,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SagParams {
    pub initial_hp: i64,
    pub hp_cap: i64,
    pub round_hp_loss: i64,
    pub initial_budget: i64,
    /// When true the auction winner is restored to `hp_cap`; otherwise the
    /// winner regains twice the per-round loss, capped.
    pub full_restore: bool,
}

impl Default for SagParams {
    fn default() -> Self {
        SagParams {
            initial_hp: 10,
            hp_cap: 10,
            round_hp_loss: 2,
            initial_budget: 100,
            full_restore: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct UndercoverParams {
    pub num_undercover: usize,
    pub word_pairs: Vec<(String, String)>,
    pub max_clue_rounds: u32,
}

impl Default for UndercoverParams {
    fn default() -> Self {
        UndercoverParams {
            num_undercover: 1,
            word_pairs: vec![("apple".into(), "pear".into())],
            max_clue_rounds: 6,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GameParams {
    G08a(G08AParams),
    Sag(SagParams),
    Undercover(UndercoverParams),
}

impl GameParams {
    pub fn g08a(&self) -> &G08AParams {
        match self {
            GameParams::G08a(p) => p,
            _ => panic!("not a g08a parameter block"),
        }
    }

    pub fn sag(&self) -> &SagParams {
        match self {
            GameParams::Sag(p) => p,
            _ => panic!("not a sag parameter block"),
        }
    }

    pub fn undercover(&self) -> &UndercoverParams {
        match self {
            GameParams::Undercover(p) => p,
            _ => panic!("not an undercover parameter block"),
        }
    }
}

/// Full description of one game instance: kind, seat count, horizon,
/// discount, seed and the per-game parameter block.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GameSpec {
    pub kind: GameKind,
    pub players: usize,
    pub horizon: u32,
    pub discount: f64,
    pub seed: u64,
    pub params: GameParams,
}

impl GameSpec {
    pub fn g08a(players: usize, horizon: u32, seed: u64) -> Self {
        GameSpec {
            kind: GameKind::G08a,
            players,
            horizon,
            discount: 1.0,
            seed,
            params: GameParams::G08a(G08AParams::default()),
        }
    }

    pub fn sag(players: usize, horizon: u32, seed: u64) -> Self {
        GameSpec {
            kind: GameKind::Sag,
            players,
            horizon,
            discount: 1.0,
            seed,
            params: GameParams::Sag(SagParams::default()),
        }
    }

    pub fn undercover(players: usize, horizon: u32, seed: u64) -> Self {
        let params = UndercoverParams {
            max_clue_rounds: horizon,
            ..UndercoverParams::default()
        };
        GameSpec {
            kind: GameKind::Undercover,
            players,
            horizon,
            discount: 1.0,
            seed,
            params: GameParams::Undercover(params),
        }
    }

    pub fn validate(&self) -> Result<(), GameError> {
        let fail = |m: &str| Err(GameError::InvalidSpec(m.to_string()));
        if self.players < 2 {
            return fail("players must be >= 2");
        }
        if self.horizon < 1 {
            return fail("horizon must be >= 1");
        }
        if !(0.0..=1.0).contains(&self.discount) {
            return fail("discount must be in [0,1]");
        }
        match (&self.kind, &self.params) {
            (GameKind::G08a, GameParams::G08a(p)) => {
                if p.action_min >= p.action_max {
                    return fail("action_min must be < action_max");
                }
                if !(p.target_factor > 0.0 && p.target_factor < 1.0) {
                    return fail("target_factor must be in (0,1)");
                }
            }
            (GameKind::Sag, GameParams::Sag(p)) => {
                if !(0 < p.round_hp_loss && p.round_hp_loss <= p.initial_hp) {
                    return fail("need 0 < round_hp_loss <= initial_hp");
                }
                if p.initial_hp > p.hp_cap {
                    return fail("initial_hp must be <= hp_cap");
                }
                if p.initial_budget < 0 {
                    return fail("initial_budget must be >= 0");
                }
            }
            (GameKind::Undercover, GameParams::Undercover(p)) => {
                if p.num_undercover == 0 || p.num_undercover >= self.players {
                    return fail("num_undercover must be in 1..players");
                }
                if p.word_pairs.is_empty() {
                    return fail("at least one word pair required");
                }
                if p.word_pairs.iter().any(|(a, b)| a == b) {
                    return fail("word pairs must be distinct within a pair");
                }
                if p.max_clue_rounds < 1 {
                    return fail("max_clue_rounds must be >= 1");
                }
            }
            _ => return fail("parameter block does not match game kind"),
        }
        Ok(())
    }

    /// Parse a spec from TOML text. Accepts either a bare game table or a
    /// document with a `[game]` section (the tournament config shape).
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let doc: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        let table = match doc.get("game") {
            Some(toml::Value::Table(t)) => t.clone(),
            _ => doc,
        };
        Self::from_toml_table(&table)
    }

    pub fn from_toml_table(table: &toml::Table) -> Result<Self, ConfigError> {
        let kind_str = table
            .get("kind")
            .and_then(|v| v.as_str())
            .ok_or_else(|| ConfigError::Invalid("game.kind missing".into()))?;
        let get_int = |key: &str, default: i64| -> Result<i64, ConfigError> {
            match table.get(key) {
                None => Ok(default),
                Some(v) => v
                    .as_integer()
                    .ok_or_else(|| ConfigError::Invalid(format!("game.{key} must be an integer"))),
            }
        };
        let players = get_int("players", 2)? as usize;
        let horizon = get_int("horizon", 10)? as u32;
        let seed = get_int("seed", 0)? as u64;
        let discount = match table.get("discount") {
            None => 1.0,
            Some(v) => v
                .as_float()
                .or_else(|| v.as_integer().map(|i| i as f64))
                .ok_or_else(|| ConfigError::Invalid("game.discount must be a number".into()))?,
        };
        let params_table = match table.get("params") {
            Some(toml::Value::Table(t)) => t.clone(),
            None => toml::Table::new(),
            Some(_) => return Err(ConfigError::Invalid("game.params must be a table".into())),
        };
        let de = |e: toml::de::Error| ConfigError::Parse(format!("game.params: {e}"));
        let (kind, params) = match kind_str {
            "g08a" => (
                GameKind::G08a,
                GameParams::G08a(params_table.try_into().map_err(de)?),
            ),
            "sag" => (
                GameKind::Sag,
                GameParams::Sag(params_table.try_into().map_err(de)?),
            ),
            "undercover" => (
                GameKind::Undercover,
                GameParams::Undercover(params_table.try_into().map_err(de)?),
            ),
            other => {
                return Err(ConfigError::Invalid(format!(
                    "unknown game kind '{other}' (expected g08a | sag | undercover)"
                )))
            }
        };
        let spec = GameSpec {
            kind,
            players,
            horizon,
            discount,
            seed,
            params,
        };
        spec.validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(spec)
    }
}
