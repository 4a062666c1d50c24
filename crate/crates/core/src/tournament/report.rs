//! Match reports: per-episode records, aggregates recomputable from them,
//! and byte-stable renderings (plain table and canonical JSON).

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::agents::PredictionPair;
use crate::error::ConfigError;
use crate::types::PlayerId;

/// Normalized mean absolute prediction error as a percentage of the action
/// range. Pairs that are not numeric on both sides are skipped; when
/// nothing remains the metric is absent, never zero.
pub fn prediction_deviation(pairs: &[PredictionPair], action_range: f64) -> Option<f64> {
    if action_range <= 0.0 {
        return None;
    }
    let errors: Vec<f64> = pairs
        .iter()
        .filter_map(|p| {
            Some((p.predicted.as_number()? - p.actual.as_number()?).abs())
        })
        .collect();
    if errors.is_empty() {
        return None;
    }
    Some(100.0 * errors.iter().sum::<f64>() / errors.len() as f64 / action_range)
}

/// Mean and population standard deviation across runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

pub fn stat_over(values: &[f64]) -> Option<Stat> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Some(Stat {
        mean,
        std: var.sqrt(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub index: u32,
    pub phase: String,
    pub seed: u64,
    pub valid: bool,
    pub abort_reason: Option<String>,
    pub rounds_played: u32,
    pub winners: BTreeSet<PlayerId>,
    pub win_share: Vec<f64>,
    pub survival: Vec<u32>,
    pub returns: Vec<f64>,
    /// Seat-0 prediction/actual pairs for this episode.
    pub predictions: Vec<PredictionPair>,
    pub violations: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: u32,
    pub episodes: Vec<EpisodeSummary>,
    pub win_rate: Option<f64>,
    pub survival: Option<f64>,
    pub deviation: Option<f64>,
    /// Deviation per evaluation episode, in order (absent for invalid or
    /// prediction-free episodes).
    pub deviation_by_episode: Vec<Option<f64>>,
    pub invalid_episodes: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatchCell {
    pub evaluated: String,
    pub evaluated_kind: String,
    pub opponents: String,
    pub win_rate: Option<Stat>,
    pub survival: Option<Stat>,
    pub deviation: Option<Stat>,
    pub invalid_episodes: u32,
    pub runs: Vec<RunRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatchReport {
    pub game: String,
    pub players: usize,
    pub horizon: u32,
    pub seed: u64,
    pub warmup_episodes: u32,
    pub eval_episodes: u32,
    pub cells: Vec<MatchCell>,
}

/// Recompute a run's aggregates from its stored per-episode records. Used
/// by the self-check that reports remain reproducible from raw records.
pub fn recompute_run(episodes: &[EpisodeSummary], action_range: f64) -> RunRecord {
    let eval: Vec<&EpisodeSummary> = episodes
        .iter()
        .filter(|e| e.phase == "eval" && e.valid)
        .collect();
    let invalid = episodes
        .iter()
        .filter(|e| e.phase == "eval" && !e.valid)
        .count() as u32;
    let win_rates: Vec<f64> = eval.iter().map(|e| e.win_share[0]).collect();
    let survivals: Vec<f64> = eval.iter().map(|e| e.survival[0] as f64).collect();
    let all_pairs: Vec<PredictionPair> = eval
        .iter()
        .flat_map(|e| e.predictions.iter().cloned())
        .collect();
    let deviation_by_episode = eval
        .iter()
        .map(|e| prediction_deviation(&e.predictions, action_range))
        .collect();
    RunRecord {
        run: 0,
        episodes: episodes.to_vec(),
        win_rate: stat_over(&win_rates).map(|s| s.mean),
        survival: stat_over(&survivals).map(|s| s.mean),
        deviation: prediction_deviation(&all_pairs, action_range),
        deviation_by_episode,
        invalid_episodes: invalid,
    }
}

pub fn aggregate_cell(
    evaluated: &str,
    evaluated_kind: &str,
    opponents: &str,
    runs: Vec<RunRecord>,
) -> MatchCell {
    let collect = |f: &dyn Fn(&RunRecord) -> Option<f64>| -> Vec<f64> {
        runs.iter().filter_map(f).collect()
    };
    let win_rates = collect(&|r| r.win_rate);
    let survivals = collect(&|r| r.survival);
    let deviations = collect(&|r| r.deviation);
    MatchCell {
        evaluated: evaluated.to_string(),
        evaluated_kind: evaluated_kind.to_string(),
        opponents: opponents.to_string(),
        win_rate: stat_over(&win_rates),
        survival: stat_over(&survivals),
        deviation: stat_over(&deviations),
        invalid_episodes: runs.iter().map(|r| r.invalid_episodes).sum(),
        runs,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Table,
    Json,
}

impl ReportFormat {
    pub fn parse(text: &str) -> Result<ReportFormat, ConfigError> {
        match text {
            "table" => Ok(ReportFormat::Table),
            "json" => Ok(ReportFormat::Json),
            other => Err(ConfigError::Invalid(format!(
                "unknown report format '{other}' (expected table | json)"
            ))),
        }
    }
}

fn fmt_stat(stat: &Option<Stat>, decimals: usize) -> String {
    match stat {
        None => "-".to_string(),
        Some(s) => format!("{:.*} ±{:.*}", decimals, s.mean, decimals, s.std),
    }
}

/// Byte-stable rendering. The table groups cells into an evaluated x
/// opponents matrix per metric, with row averages; JSON is the canonical
/// sorted-key serialization of the whole report.
pub fn render_report(report: &MatchReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let value = serde_json::to_value(report).expect("report serializes");
            let mut text = serde_json::to_string_pretty(&value).expect("canonical json");
            text.push('\n');
            text
        }
        ReportFormat::Table => render_table(report),
    }
}

fn render_table(report: &MatchReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "# game: {} | players: {} | horizon: {} | seed: {}\n",
        report.game, report.players, report.horizon, report.seed
    ));
    out.push_str(&format!(
        "# warmup: {} | eval: {}\n",
        report.warmup_episodes, report.eval_episodes
    ));

    let mut evaluated: Vec<String> = Vec::new();
    let mut opponents: Vec<String> = Vec::new();
    for cell in &report.cells {
        if !evaluated.contains(&cell.evaluated) {
            evaluated.push(cell.evaluated.clone());
        }
        if !opponents.contains(&cell.opponents) {
            opponents.push(cell.opponents.clone());
        }
    }
    let cell_of = |e: &str, o: &str| {
        report
            .cells
            .iter()
            .find(|c| c.evaluated == e && c.opponents == o)
    };

    let metrics: [(&str, fn(&MatchCell) -> Option<Stat>, usize); 3] = [
        ("win-rate", |c| c.win_rate, 3),
        ("survival-rounds", |c| c.survival, 2),
        ("prediction-deviation-pct", |c| c.deviation, 2),
    ];
    for (metric, get, decimals) in metrics {
        out.push_str(&format!("\n## {metric}\n"));
        let header: Vec<String> = std::iter::once("evaluated".to_string())
            .chain(opponents.iter().cloned())
            .chain(std::iter::once("avg".to_string()))
            .collect();
        let mut rows: Vec<Vec<String>> = vec![header];
        for e in &evaluated {
            let mut row = vec![e.clone()];
            let mut values = Vec::new();
            for o in &opponents {
                match cell_of(e, o) {
                    Some(cell) => {
                        let stat = get(cell);
                        if let Some(s) = stat {
                            values.push(s.mean);
                        }
                        row.push(fmt_stat(&stat, decimals));
                    }
                    None => row.push(String::new()),
                }
            }
            row.push(match stat_over(&values) {
                Some(s) => format!("{:.*}", decimals, s.mean),
                None => "-".to_string(),
            });
            rows.push(row);
        }
        let widths: Vec<usize> = (0..rows[0].len())
            .map(|i| rows.iter().map(|r| r[i].len()).max().unwrap_or(0))
            .collect();
        for row in rows {
            let line: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(i, cellule)| format!("{:w$}", cellule, w = widths[i]))
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        }
    }
    let invalid: u32 = report.cells.iter().map(|c| c.invalid_episodes).sum();
    out.push_str(&format!("\n# invalid episodes excluded: {invalid}\n"));
    out
}
