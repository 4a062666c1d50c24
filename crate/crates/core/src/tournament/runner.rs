//! Episode and match orchestration: warm-up with model updates, a freeze
//! boundary, then evaluation episodes and metric aggregation.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::Serialize;

use crate::agents::{build_agent, ActContext, Agent, AgentEvent, EpisodeContext};
use crate::backend::prompts::summarize_reveals;
use crate::backend::Reasoner;
use crate::error::ConfigError;
use crate::game::{GameEngine, GameKind, GameSpec, Trajectory, Violation};
use crate::store::{archive_model, save_model, Provenance, SaveOptions};
use crate::tournament::config::{Matchup, TournamentConfig};
use crate::tournament::report::{
    aggregate_cell, recompute_run, EpisodeSummary, MatchCell, MatchReport,
};
use crate::types::{derive_seed, Action, PlayerId};

/// Numeric action span used to normalize prediction deviation.
pub fn action_range(spec: &GameSpec) -> f64 {
    match spec.kind {
        GameKind::G08a => {
            let p = spec.params.g08a();
            (p.action_max - p.action_min) as f64
        }
        GameKind::Sag => spec.params.sag().initial_budget as f64,
        GameKind::Undercover => 0.0,
    }
}

#[derive(Serialize)]
struct RoundLogRecord<'a> {
    round: u32,
    phase: &'a str,
    /// Joint action, private fields included — logs only.
    actions: BTreeMap<String, &'a Action>,
    rewards: &'a [f64],
    winners: &'a BTreeSet<PlayerId>,
    reveal: &'a BTreeMap<String, crate::types::Value>,
    eliminated: &'a [PlayerId],
    terminal: bool,
    observation_digests: BTreeMap<String, String>,
}

pub struct EpisodeResult {
    pub summary: EpisodeSummary,
    /// One JSON record per resolved phase.
    pub log: String,
    /// Per-agent event log lines (seat, event).
    pub events: Vec<(usize, AgentEvent)>,
    /// Short public transcript for warm-up history digests.
    pub public_summary: String,
}

/// Drive one full episode. Fatal agent errors abort the episode, which is
/// then marked invalid and excluded from aggregates.
pub fn run_episode(
    spec: &GameSpec,
    agents: &mut [Box<dyn Agent>],
    episode_seed: u64,
    episode_index: u64,
    phase_label: &str,
    summary_index: u32,
) -> EpisodeResult {
    let n = spec.players;
    debug_assert_eq!(agents.len(), n);
    let mut summary = EpisodeSummary {
        index: summary_index,
        phase: phase_label.to_string(),
        seed: episode_seed,
        valid: true,
        abort_reason: None,
        rounds_played: 0,
        winners: BTreeSet::new(),
        win_share: vec![0.0; n],
        survival: vec![0; n],
        returns: vec![0.0; n],
        predictions: Vec::new(),
        violations: 0,
    };
    let mut log_lines: Vec<String> = Vec::new();
    let mut events: Vec<(usize, AgentEvent)> = Vec::new();
    let mut violations: Vec<Violation> = Vec::new();

    let mut engine = match GameEngine::new(spec, episode_seed) {
        Ok(engine) => engine,
        Err(e) => {
            summary.valid = false;
            summary.abort_reason = Some(e.to_string());
            return EpisodeResult {
                summary,
                log: String::new(),
                events,
                public_summary: String::new(),
            };
        }
    };

    for (seat, agent) in agents.iter_mut().enumerate() {
        agent.begin_episode(&EpisodeContext {
            seat: PlayerId(seat),
            spec: spec.clone(),
            episode_seed,
            episode_index,
        });
    }

    let mut trajectories: Vec<Trajectory> = vec![Trajectory::default(); n];
    let mut round_wins = vec![0.0; n];
    let mut final_outcome = None;

    'episode: while !engine.is_terminal() {
        let alive = engine.alive();
        let mut actions: BTreeMap<PlayerId, Action> = BTreeMap::new();
        let mut observations = BTreeMap::new();
        for seat in &alive {
            let observation = match engine.observation_for(*seat) {
                Ok(obs) => obs,
                Err(e) => {
                    summary.valid = false;
                    summary.abort_reason = Some(e.to_string());
                    break 'episode;
                }
            };
            let ctx = ActContext {
                observation: &observation,
                numeric_range: engine.numeric_action_range(*seat),
                alive: &alive,
            };
            match agents[seat.0].act(&ctx) {
                Ok(action) => {
                    let (clean, violation) = engine.sanitize(*seat, action);
                    if let Some(v) = violation {
                        violations.push(v);
                    }
                    actions.insert(*seat, clean);
                }
                Err(e) => {
                    summary.valid = false;
                    summary.abort_reason =
                        Some(format!("agent at seat {seat} failed: {e}"));
                    break 'episode;
                }
            }
            observations.insert(*seat, observation);
        }

        let outcome = match engine.step(&actions) {
            Ok(outcome) => outcome,
            Err(e) => {
                summary.valid = false;
                summary.abort_reason = Some(e.to_string());
                break 'episode;
            }
        };

        let mut digests = BTreeMap::new();
        for seat in 0..n {
            if let Ok(obs) = engine.observation_for(PlayerId(seat)) {
                digests.insert(PlayerId(seat).to_string(), obs.digest());
            }
        }
        let record = RoundLogRecord {
            round: outcome.round,
            phase: outcome.phase.name(),
            actions: actions
                .iter()
                .map(|(p, a)| (p.to_string(), a))
                .collect(),
            rewards: &outcome.rewards,
            winners: &outcome.winners,
            reveal: &outcome.reveal,
            eliminated: &outcome.eliminated,
            terminal: outcome.terminal,
            observation_digests: digests,
        };
        log_lines.push(serde_json::to_string(&record).expect("log record serializes"));

        if !outcome.winners.is_empty() {
            let share = 1.0 / outcome.winners.len() as f64;
            for w in &outcome.winners {
                round_wins[w.0] += share;
            }
        }
        for seat in &alive {
            let obs = observations.remove(seat).expect("collected above");
            let action = actions.get(seat).expect("acted").clone();
            trajectories[seat.0].push(obs, action, outcome.rewards[seat.0]);
        }
        for seat in &alive {
            let reveal = engine.reveal_for(*seat, &outcome, &actions);
            agents[seat.0].observe_round(&reveal);
        }
        final_outcome = Some(outcome);
    }

    summary.rounds_played = engine.state.round;
    summary.violations = violations.len() as u32;
    for (seat, trajectory) in trajectories.iter().enumerate() {
        summary.returns[seat] = crate::game::episode_return(trajectory, spec.discount);
        summary.survival[seat] = engine.state.eliminated_round[seat]
            .map(|r| r + 1)
            .unwrap_or(engine.state.round);
    }
    if summary.valid {
        summary.win_share = match spec.kind {
            GameKind::G08a => {
                let best = round_wins.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let winners: Vec<usize> = round_wins
                    .iter()
                    .enumerate()
                    .filter(|(_, w)| **w == best && best > 0.0)
                    .map(|(i, _)| i)
                    .collect();
                let mut share = vec![0.0; n];
                for w in &winners {
                    share[*w] = 1.0 / winners.len() as f64;
                    summary.winners.insert(PlayerId(*w));
                }
                share
            }
            GameKind::Sag => {
                let alive: Vec<usize> = (0..n).filter(|i| engine.state.players[*i].alive).collect();
                let mut share = vec![0.0; n];
                for a in &alive {
                    share[*a] = 1.0 / alive.len().max(1) as f64;
                    summary.winners.insert(PlayerId(*a));
                }
                share
            }
            GameKind::Undercover => {
                let mut share = vec![0.0; n];
                if let Some(outcome) = &final_outcome {
                    for w in &outcome.winners {
                        share[w.0] = 1.0 / outcome.winners.len() as f64;
                        summary.winners.insert(*w);
                    }
                }
                share
            }
        };
    }

    summary.predictions = agents[0].drain_predictions();
    for (seat, agent) in agents.iter_mut().enumerate() {
        if seat != 0 {
            let _ = agent.drain_predictions();
        }
        for event in agent.drain_events() {
            events.push((seat, event));
        }
        agent.end_episode();
    }
    // violations belong to the log for reproducibility audits
    for v in &violations {
        log_lines.push(
            serde_json::to_string(&serde_json::json!({ "violation": v }))
                .expect("violation serializes"),
        );
    }

    let mut log = log_lines.join("\n");
    if !log.is_empty() {
        log.push('\n');
    }
    EpisodeResult {
        summary,
        log,
        events,
        public_summary: summarize_reveals(&engine.state.reveals, 12),
    }
}

/// Everything one matchup produces besides the aggregate cell.
pub struct MatchArtifacts {
    pub cell: MatchCell,
    /// (file stem, JSONL content) per episode.
    pub logs: Vec<(String, String)>,
    /// (file stem, JSONL content) of per-episode agent events.
    pub event_logs: Vec<(String, String)>,
    /// Serialized opponent models per modeling seat, before evaluation
    /// (last run).
    pub pre_eval_archives: BTreeMap<String, Vec<u8>>,
    /// Same, after evaluation ran.
    pub post_eval_archives: BTreeMap<String, Vec<u8>>,
    /// Number of (run, seat) pairs whose frozen model changed during eval.
    pub freeze_violations: u32,
}

fn capture_archives(
    agents: &[Box<dyn Agent>],
    names: &[String],
    backend_name: &str,
    game: GameKind,
) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for (seat, agent) in agents.iter().enumerate() {
        if let Some(model) = agent.opponent_model() {
            let provenance = Provenance {
                builder_agent: names[seat].clone(),
                backend: backend_name.to_string(),
                game: game.name().to_string(),
                created: "unspecified".to_string(),
            };
            let archive = archive_model(model, provenance, SaveOptions::default());
            out.insert(format!("{}-seat{seat}", names[seat]), save_model(&archive));
        }
    }
    out
}

pub fn run_matchup(
    config: &TournamentConfig,
    matchup: &Matchup,
    backend: Arc<dyn Reasoner>,
) -> Result<MatchArtifacts, ConfigError> {
    run_matchup_with_import(config, matchup, backend, None)
}

/// Run one matchup; `import` optionally preloads seat 0's opponent model
/// (the transfer protocol).
pub fn run_matchup_with_import(
    config: &TournamentConfig,
    matchup: &Matchup,
    backend: Arc<dyn Reasoner>,
    import: Option<&crate::agents::OpponentModel>,
) -> Result<MatchArtifacts, ConfigError> {
    let spec = &config.game;
    let seats = config.seat_agents(matchup);
    let names: Vec<String> = seats.iter().map(|(name, _)| name.clone()).collect();
    let range = action_range(spec);

    let mut logs = Vec::new();
    let mut event_logs = Vec::new();
    let mut runs = Vec::new();
    let mut pre_eval_archives = BTreeMap::new();
    let mut post_eval_archives = BTreeMap::new();
    let mut freeze_violations = 0u32;

    for run in 0..config.settings.runs.max(1) {
        let mut agents: Vec<Box<dyn Agent>> = seats
            .iter()
            .map(|(_, agent_config)| build_agent(agent_config, spec, Arc::clone(&backend)))
            .collect::<Result<_, _>>()?;
        if let Some(model) = import {
            agents[0]
                .load_opponent_model(model.clone())
                .map_err(ConfigError::Invalid)?;
        }

        let mut episodes: Vec<EpisodeSummary> = Vec::new();
        let mut warmup_summaries: Vec<String> = Vec::new();

        for e in 0..config.settings.warmup_episodes {
            let seed = derive_seed(spec.seed, run as u64 + 1, 0x1000 + e as u64);
            let result = run_episode(spec, &mut agents, seed, e as u64, "warmup", e);
            push_logs(&mut logs, &mut event_logs, matchup, run, "warmup", e, &result);
            warmup_summaries.push(format!("episode {e}:\n{}", result.public_summary));
            episodes.push(result.summary);
        }

        // boundary: histories become context, models freeze
        let digest_window = warmup_summaries.len().saturating_sub(5);
        let digest = warmup_summaries[digest_window..].join("\n");
        for agent in &mut agents {
            agent.set_history_digest(digest.clone());
            if config.settings.freeze_eval {
                agent.freeze(true);
            }
        }
        let pre = capture_archives(&agents, &names, backend.name(), spec.kind);

        let eval_count = config.settings.eval_episodes;
        let eval_seed =
            |e: u32| derive_seed(spec.seed, run as u64 + 1, 0x2000 + e as u64);
        let mut post = pre.clone();
        if config.settings.freeze_eval && eval_count > 0 {
            // frozen evaluation: every episode starts from the same state,
            // so episodes are independent and may run concurrently
            let run_one = |e: u32| {
                let mut clones: Vec<Box<dyn Agent>> =
                    agents.iter().map(|a| a.clone_boxed()).collect();
                let result = run_episode(
                    spec,
                    &mut clones,
                    eval_seed(e),
                    (config.settings.warmup_episodes + e) as u64,
                    "eval",
                    e,
                );
                let archives = capture_archives(&clones, &names, backend.name(), spec.kind);
                (result, archives)
            };
            let results: Vec<(EpisodeResult, BTreeMap<String, Vec<u8>>)> =
                if config.settings.parallelism > 1 {
                    let pool = rayon::ThreadPoolBuilder::new()
                        .num_threads(config.settings.parallelism)
                        .build()
                        .map_err(|e| ConfigError::Invalid(e.to_string()))?;
                    pool.install(|| {
                        use rayon::prelude::*;
                        (0..eval_count).into_par_iter().map(run_one).collect()
                    })
                } else {
                    (0..eval_count).map(run_one).collect()
                };
            for (e, (result, archives)) in results.into_iter().enumerate() {
                push_logs(
                    &mut logs,
                    &mut event_logs,
                    matchup,
                    run,
                    "eval",
                    e as u32,
                    &result,
                );
                episodes.push(result.summary);
                post = archives;
            }
        } else {
            for e in 0..eval_count {
                let result = run_episode(
                    spec,
                    &mut agents,
                    eval_seed(e),
                    (config.settings.warmup_episodes + e) as u64,
                    "eval",
                    e,
                );
                push_logs(&mut logs, &mut event_logs, matchup, run, "eval", e, &result);
                episodes.push(result.summary);
            }
            post = capture_archives(&agents, &names, backend.name(), spec.kind);
        }

        if config.settings.freeze_eval {
            for (name, bytes) in &pre {
                if post.get(name) != Some(bytes) {
                    freeze_violations += 1;
                }
            }
        }

        let mut record = recompute_run(&episodes, range);
        record.run = run;
        runs.push(record);
        pre_eval_archives = pre;
        post_eval_archives = post;
    }

    let evaluated_kind = seats[0].1.kind.clone();
    let cell = aggregate_cell(
        &matchup.evaluated,
        &evaluated_kind,
        &config.opponents_label(matchup),
        runs,
    );
    Ok(MatchArtifacts {
        cell,
        logs,
        event_logs,
        pre_eval_archives,
        post_eval_archives,
        freeze_violations,
    })
}

fn push_logs(
    logs: &mut Vec<(String, String)>,
    event_logs: &mut Vec<(String, String)>,
    matchup: &Matchup,
    run: u32,
    phase: &str,
    index: u32,
    result: &EpisodeResult,
) {
    let stem = format!("{}_run{run}_{phase}_{index:03}", matchup.evaluated);
    logs.push((format!("{stem}.jsonl"), result.log.clone()));
    let event_lines: Vec<String> = result
        .events
        .iter()
        .map(|(seat, event)| {
            serde_json::to_string(&serde_json::json!({
                "seat": seat,
                "seq": event.seq,
                "round": event.round,
                "stage": event.stage,
                "detail": event.detail,
            }))
            .expect("event serializes")
        })
        .collect();
    let mut content = event_lines.join("\n");
    if !content.is_empty() {
        content.push('\n');
    }
    event_logs.push((format!("{stem}_events.jsonl"), content));
}

/// One row of the component-ablation grid.
#[derive(Debug, Clone, Serialize)]
pub struct AblationRow {
    pub variant: String,
    pub deviation: Option<f64>,
    pub win_rate: Option<f64>,
}

/// Run the five incremental variants on the first configured matchup under
/// one seed set and report (prediction deviation, win rate) per variant.
pub fn run_ablation(config: &TournamentConfig) -> Result<Vec<AblationRow>, ConfigError> {
    let matchup = config
        .matchups
        .first()
        .ok_or_else(|| ConfigError::Invalid("ablation needs a matchup".into()))?;
    let base = config.agents[&matchup.evaluated].clone();
    if base.agent_kind()? != crate::agents::AgentKind::Som {
        return Err(ConfigError::Invalid(
            "ablation requires the evaluated agent to be of kind 'som'".into(),
        ));
    }
    let backend = config.build_backend()?;
    let mut rows = Vec::new();
    for (label, variant) in crate::agents::ablation_variants(&base) {
        let mut variant_config = config.clone();
        variant_config
            .agents
            .insert(matchup.evaluated.clone(), variant);
        let artifacts = run_matchup(&variant_config, matchup, Arc::clone(&backend))?;
        rows.push(AblationRow {
            variant: label.to_string(),
            deviation: artifacts.cell.deviation.map(|s| s.mean),
            win_rate: artifacts.cell.win_rate.map(|s| s.mean),
        });
    }
    Ok(rows)
}

/// Two-column text rendering of the ablation grid; byte-stable.
pub fn render_ablation(rows: &[AblationRow]) -> String {
    let mut out = String::from("variant             deviation-pct  win-rate\n");
    for row in rows {
        let deviation = row
            .deviation
            .map(|d| format!("{d:.2}"))
            .unwrap_or_else(|| "-".into());
        let win = row
            .win_rate
            .map(|w| format!("{w:.3}"))
            .unwrap_or_else(|| "-".into());
        out.push_str(&format!("{:<18}  {:>13}  {:>8}\n", row.variant, deviation, win));
    }
    out
}

/// Run every configured matchup and assemble the report.
pub fn run_tournament(
    config: &TournamentConfig,
) -> Result<(MatchReport, Vec<MatchArtifacts>), ConfigError> {
    let backend = config.build_backend()?;
    let mut cells = Vec::new();
    let mut artifacts = Vec::new();
    for matchup in &config.matchups {
        let art = run_matchup(config, matchup, Arc::clone(&backend))?;
        cells.push(art.cell.clone());
        artifacts.push(art);
    }
    let report = MatchReport {
        game: config.game.kind.name().to_string(),
        players: config.game.players,
        horizon: config.game.horizon,
        seed: config.game.seed,
        warmup_episodes: config.settings.warmup_episodes,
        eval_episodes: config.settings.eval_episodes,
        cells,
    };
    Ok((report, artifacts))
}
