//! Multi-agent game simulation with structured opponent modeling.
//!
//! Agents build an explicit causal-graph model of each opponent's decision
//! process during play, then predict opponent actions by traversing that
//! graph in topological order, guided by retrieved opponent-specific
//! reasoning examples. The crate bundles:
//!
//! - [`game`]: the partially observable game core and three environments
//!   (G0.8A number guessing, the Survival Auction Game, Undercover);
//! - [`scm`]: the causal graph, example pools and topological inference;
//! - [`backend`]: reasoning backends (scripted rules for deterministic
//!   runs, an OpenAI-compatible HTTP client for live ones);
//! - [`agents`]: the opponent-modeling agent, prompt-strategy baselines and
//!   scripted opponents;
//! - [`tournament`]: warm-up/evaluation match orchestration and metrics;
//! - [`store`]: canonical, transferable opponent-model archives.

pub mod agents;
pub mod backend;
pub mod error;
pub mod game;
pub mod scm;
pub mod store;
pub mod tournament;
pub mod types;

pub use error::{BackendError, ConfigError, GameError, ScmError, StoreError};
pub use types::{derive_seed, Action, PlayerId, Value};
