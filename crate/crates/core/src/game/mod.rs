//! Game environments: the partially observable multi-agent core plus the
//! three concrete games (G0.8A, Survival Auction, Undercover), all with
//! deterministic seeded dynamics.

pub mod engine;
pub mod g08a;
pub mod sag;
pub mod spec;
pub mod state;
pub mod undercover;

pub use engine::{GameEngine, RoundReveal, Violation};
pub use g08a::g08a_step;
pub use sag::sag_step;
pub use spec::{G08AParams, GameKind, GameParams, GameSpec, SagParams, UndercoverParams};
pub use state::{
    episode_return, GameState, Observation, Phase, PlayerStatus, RevealRecord, Role, RoundOutcome,
    Trajectory, TrajectoryStep,
};
pub use undercover::{undercover_step, UndercoverInput};
