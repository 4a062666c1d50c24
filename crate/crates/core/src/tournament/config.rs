//! Tournament configuration: one game, a backend, named agent configs and
//! the matchups to run. Plain TOML on disk.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::agents::AgentConfig;
use crate::backend::{HttpBackend, HttpBackendConfig, Reasoner, ScriptedBackend};
use crate::error::ConfigError;
use crate::game::GameSpec;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchSettings {
    /// Episodes with model updates enabled before evaluation.
    pub warmup_episodes: u32,
    pub eval_episodes: u32,
    /// Independent repetitions; aggregates report mean and std across runs.
    pub runs: u32,
    /// Freeze opponent models (graph and pools read-only) during evaluation.
    pub freeze_eval: bool,
    /// Max eval episodes resolved concurrently (frozen evaluation only).
    pub parallelism: usize,
}

impl Default for MatchSettings {
    fn default() -> Self {
        MatchSettings {
            warmup_episodes: 5,
            eval_episodes: 10,
            runs: 1,
            freeze_eval: true,
            parallelism: 1,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendSettings {
    /// "scripted" (default) or "http".
    pub kind: String,
    /// Path to a scripted rules file, relative to the config file.
    pub rules_file: Option<PathBuf>,
    /// Inline rules, mostly for tests and generated configs.
    pub rules_text: Option<String>,
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub timeout_secs: Option<u64>,
    pub max_retries: Option<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Matchup {
    /// Agent name seated at seat 0 and reported as the evaluated method.
    pub evaluated: String,
    /// Agent names cycled over the remaining seats.
    pub opponents: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct TournamentConfig {
    pub game: GameSpec,
    pub settings: MatchSettings,
    pub backend: BackendSettings,
    pub agents: BTreeMap<String, AgentConfig>,
    pub matchups: Vec<Matchup>,
}

#[derive(Deserialize)]
struct RawConfig {
    game: toml::Table,
    #[serde(rename = "match", default)]
    settings: MatchSettings,
    #[serde(default)]
    backend: BackendSettings,
    #[serde(default)]
    agents: BTreeMap<String, AgentConfig>,
    #[serde(default)]
    matchups: Vec<Matchup>,
}

impl TournamentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let game = GameSpec::from_toml_table(&raw.game)?;
        let config = TournamentConfig {
            game,
            settings: raw.settings,
            backend: raw.backend,
            agents: raw.agents,
            matchups: raw.matchups,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        let mut config = Self::from_toml_str(&text)?;
        // resolve the rules file relative to the config location
        if let (Some(rules), Some(dir)) = (&config.backend.rules_file, path.parent()) {
            if rules.is_relative() {
                config.backend.rules_file = Some(dir.join(rules));
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.matchups.is_empty() {
            return Err(ConfigError::Invalid("no matchups configured".into()));
        }
        for m in &self.matchups {
            for name in std::iter::once(&m.evaluated).chain(m.opponents.iter()) {
                let agent = self.agents.get(name).ok_or_else(|| {
                    ConfigError::Invalid(format!("matchup references unknown agent '{name}'"))
                })?;
                agent.agent_kind()?;
            }
            if m.opponents.is_empty() {
                return Err(ConfigError::Invalid(format!(
                    "matchup '{}' has no opponents",
                    m.evaluated
                )));
            }
        }
        match self.backend.kind.as_str() {
            "" | "scripted" => {
                if self.backend.rules_file.is_none() && self.backend.rules_text.is_none() {
                    return Err(ConfigError::Invalid(
                        "scripted backend needs rules_file or rules_text".into(),
                    ));
                }
            }
            "http" => {}
            other => {
                return Err(ConfigError::Invalid(format!(
                    "unknown backend kind '{other}'"
                )))
            }
        }
        Ok(())
    }

    /// Seat assignment for one matchup: evaluated at seat 0, opponents
    /// cycled across the rest.
    pub fn seat_agents(&self, matchup: &Matchup) -> Vec<(String, AgentConfig)> {
        let mut seats = Vec::with_capacity(self.game.players);
        seats.push((
            matchup.evaluated.clone(),
            self.agents[&matchup.evaluated].clone(),
        ));
        for i in 0..self.game.players - 1 {
            let name = &matchup.opponents[i % matchup.opponents.len()];
            seats.push((name.clone(), self.agents[name].clone()));
        }
        seats
    }

    pub fn opponents_label(&self, matchup: &Matchup) -> String {
        matchup.opponents.join("+")
    }

    pub fn build_backend(&self) -> Result<Arc<dyn Reasoner>, ConfigError> {
        match self.backend.kind.as_str() {
            "" | "scripted" => {
                let backend = if let Some(text) = &self.backend.rules_text {
                    ScriptedBackend::from_rules_text(text)
                        .map_err(|e| ConfigError::Invalid(e.to_string()))?
                } else {
                    let path = self.backend.rules_file.as_ref().expect("validated");
                    ScriptedBackend::from_file(path)
                        .map_err(|e| ConfigError::Invalid(e.to_string()))?
                };
                Ok(Arc::new(backend))
            }
            "http" => {
                let mut http = HttpBackendConfig::default();
                if let Some(endpoint) = &self.backend.endpoint {
                    http.endpoint = endpoint.clone();
                }
                if let Some(model) = &self.backend.model {
                    http.model = model.clone();
                }
                if let Some(secs) = self.backend.timeout_secs {
                    http.timeout = std::time::Duration::from_secs(secs);
                }
                if let Some(retries) = self.backend.max_retries {
                    http.max_retries = retries;
                }
                let backend = HttpBackend::new(http.with_env_overrides())
                    .map_err(|e| ConfigError::Invalid(e.to_string()))?;
                Ok(Arc::new(backend))
            }
            other => Err(ConfigError::Invalid(format!(
                "unknown backend kind '{other}'"
            ))),
        }
    }
}
