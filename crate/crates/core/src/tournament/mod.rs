//! Match orchestration: warm-up then frozen evaluation, per-episode logs,
//! and the win-rate / survival / prediction-deviation metrics.

pub mod config;
pub mod report;
pub mod runner;

pub use config::{BackendSettings, MatchSettings, Matchup, TournamentConfig};
pub use report::{
    aggregate_cell, prediction_deviation, recompute_run, render_report, EpisodeSummary,
    MatchCell, MatchReport, ReportFormat, RunRecord, Stat,
};
pub use runner::{
    action_range, render_ablation, run_ablation, run_episode, run_matchup,
    run_matchup_with_import, run_tournament, AblationRow, EpisodeResult, MatchArtifacts,
};
