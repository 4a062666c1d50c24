//! Command implementations behind the `som` binary: run matches and
//! ablations, re-render reports, export and import opponent-model archives,
//! validate configs. Every command is deterministic given its config and
//! seeds, and writes only inside the chosen output directory.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use som_core::error::ConfigError;
use som_core::store;
use som_core::tournament::{
    render_ablation, render_report, run_ablation, run_matchup_with_import, run_tournament,
    MatchReport, ReportFormat, TournamentConfig,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BACKEND: i32 = 3;
pub const EXIT_INVARIANT: i32 = 4;
pub const EXIT_ARCHIVE: i32 = 5;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Backend(String),
    Invariant(String),
    Archive(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Backend(m) => write!(f, "backend error: {m}"),
            CliError::Invariant(m) => write!(f, "invariant violation: {m}"),
            CliError::Archive(m) => write!(f, "archive error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Backend(_) => EXIT_BACKEND,
            CliError::Invariant(_) => EXIT_INVARIANT,
            CliError::Archive(_) => EXIT_ARCHIVE,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(format!("io: {e}"))
    }
}

impl From<som_core::error::StoreError> for CliError {
    fn from(e: som_core::error::StoreError) -> Self {
        CliError::Archive(e.to_string())
    }
}

/// Overrides shared by the run-like commands.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub backend: Option<String>,
    pub parallelism: Option<usize>,
    pub freeze_eval: Option<bool>,
}

impl Overrides {
    fn apply(&self, config: &mut TournamentConfig) -> Result<(), CliError> {
        if let Some(seed) = self.seed {
            config.game.seed = seed;
        }
        if let Some(kind) = &self.backend {
            match kind.as_str() {
                "scripted" | "http" => config.backend.kind = kind.clone(),
                other => {
                    return Err(CliError::Config(format!(
                        "unknown backend override '{other}'"
                    )))
                }
            }
        }
        if let Some(p) = self.parallelism {
            config.settings.parallelism = p.max(1);
        }
        if let Some(freeze) = self.freeze_eval {
            config.settings.freeze_eval = freeze;
        }
        config.validate()?;
        Ok(())
    }
}

fn load_config(path: &Path, overrides: &Overrides) -> Result<(TournamentConfig, String), CliError> {
    if !path.exists() {
        return Err(CliError::Config(format!(
            "config file not found: {}",
            path.display()
        )));
    }
    let text = fs::read_to_string(path)?;
    let mut config = TournamentConfig::from_file(path)?;
    overrides.apply(&mut config)?;
    Ok((config, text))
}

fn write_outputs(
    out: &Path,
    config_snapshot: &str,
    overrides: &Overrides,
    report: &MatchReport,
    artifacts: &[som_core::tournament::MatchArtifacts],
) -> Result<(), CliError> {
    fs::create_dir_all(out.join("logs"))?;
    fs::create_dir_all(out.join("events"))?;
    fs::create_dir_all(out.join("models"))?;
    fs::write(out.join("config.toml"), config_snapshot)?;
    fs::write(
        out.join("overrides.json"),
        serde_json::to_string_pretty(&serde_json::json!({
            "seed": overrides.seed,
            "backend": overrides.backend,
            "parallelism": overrides.parallelism,
            "freeze_eval": overrides.freeze_eval,
        }))
        .expect("overrides serialize")
            + "\n",
    )?;
    fs::write(
        out.join("report.txt"),
        render_report(report, ReportFormat::Table),
    )?;
    fs::write(
        out.join("report.json"),
        render_report(report, ReportFormat::Json),
    )?;
    for art in artifacts {
        for (name, content) in &art.logs {
            fs::write(out.join("logs").join(name), content)?;
        }
        for (name, content) in &art.event_logs {
            fs::write(out.join("events").join(name), content)?;
        }
        for (name, bytes) in &art.post_eval_archives {
            fs::write(
                out.join("models").join(format!("{name}.{}", store::EXTENSION)),
                bytes,
            )?;
        }
    }
    Ok(())
}

/// `som run`: execute the configured tournament, writing the report, logs
/// and final model archives under the output directory.
pub fn cmd_run(
    config_path: &Path,
    out: &Path,
    overrides: &Overrides,
    ablation: bool,
) -> Result<(), CliError> {
    let (config, snapshot) = load_config(config_path, overrides)?;
    let (report, artifacts) = run_tournament(&config).map_err(map_run_error)?;
    write_outputs(out, &snapshot, overrides, &report, &artifacts)?;
    if ablation {
        let rows = run_ablation(&config).map_err(map_run_error)?;
        fs::write(out.join("ablation.txt"), render_ablation(&rows))?;
        let json = serde_json::to_string_pretty(
            &serde_json::to_value(&rows).expect("rows serialize"),
        )
        .expect("canonical json");
        fs::write(out.join("ablation.json"), json + "\n")?;
    }
    let freeze_violations: u32 = artifacts.iter().map(|a| a.freeze_violations).sum();
    if freeze_violations > 0 {
        return Err(CliError::Invariant(format!(
            "{freeze_violations} frozen model(s) changed during evaluation"
        )));
    }
    println!("{}", render_report(&report, ReportFormat::Table));
    Ok(())
}

fn map_run_error(e: ConfigError) -> CliError {
    let text = e.to_string();
    if text.contains("backend") || text.contains("transport") {
        CliError::Backend(text)
    } else {
        CliError::Config(text)
    }
}

/// `som report`: re-render a stored structured report.
pub fn cmd_report(input: &Path, format: &str, out: Option<&Path>) -> Result<(), CliError> {
    let format = ReportFormat::parse(format)?;
    let text = fs::read_to_string(input)
        .map_err(|e| CliError::Config(format!("cannot read report: {e}")))?;
    let report: MatchReport = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("malformed report: {e}")))?;
    let rendered = render_report(&report, format);
    match out {
        Some(path) => fs::write(path, rendered)?,
        None => print!("{rendered}"),
    }
    Ok(())
}

/// `som validate-config`: parse and validate, reporting problems.
pub fn cmd_validate_config(config_path: &Path) -> Result<(), CliError> {
    let (config, _) = load_config(config_path, &Overrides::default())?;
    config.build_backend().map_err(map_run_error)?;
    println!(
        "ok: {} matchup(s), {} agent(s), game {}",
        config.matchups.len(),
        config.agents.len(),
        config.game.kind.name()
    );
    Ok(())
}

/// `som export-model`: run the configured match and write the named SOM
/// agent's final opponent-model archive.
pub fn cmd_export_model(
    config_path: &Path,
    out: &Path,
    agent: &str,
    overrides: &Overrides,
    exclude_pools: bool,
    exclude_intermediates: bool,
) -> Result<PathBuf, CliError> {
    let (config, snapshot) = load_config(config_path, overrides)?;
    let (report, artifacts) = run_tournament(&config).map_err(map_run_error)?;
    write_outputs(out, &snapshot, overrides, &report, &artifacts)?;
    let key_prefix = format!("{agent}-seat");
    let (_, bytes) = artifacts
        .iter()
        .flat_map(|a| a.post_eval_archives.iter())
        .find(|(name, _)| name.starts_with(&key_prefix))
        .ok_or_else(|| {
            CliError::Config(format!(
                "agent '{agent}' produced no opponent model (not a som agent?)"
            ))
        })?;
    let path = out.join(format!("{agent}.{}", store::EXTENSION));
    if exclude_pools || exclude_intermediates {
        let (archive, provenance) = store::load_archive(bytes)?;
        let model = store::load_model(bytes)?;
        let options = store::SaveOptions {
            exclude_pools,
            exclude_graph_intermediates: exclude_intermediates,
        };
        let trimmed = store::archive_model(&model, provenance, options);
        store::save_to_file(&trimmed, &path)?;
        drop(archive);
    } else {
        fs::write(&path, bytes)?;
    }
    Ok(path)
}

/// `som import-model`: start the named SOM agent from an archive and run
/// the match; `frozen` skips warm-up and locks the model.
pub fn cmd_import_model(
    config_path: &Path,
    out: &Path,
    agent: &str,
    archive_path: &Path,
    frozen: bool,
    overrides: &Overrides,
) -> Result<(), CliError> {
    let (mut config, snapshot) = load_config(config_path, overrides)?;
    let (_, _provenance) = store::load_from_file(archive_path)?;
    let bytes = fs::read(archive_path)?;
    let model = store::load_model(&bytes)?;
    if frozen {
        config.settings.warmup_episodes = 0;
        config.settings.freeze_eval = true;
    }
    let backend = config.build_backend().map_err(map_run_error)?;
    let mut cells = Vec::new();
    let mut artifacts = Vec::new();
    for matchup in config.matchups.clone() {
        if config.agents[&matchup.evaluated].agent_kind().map_err(CliError::from)?
            != som_core::agents::AgentKind::Som
            || matchup.evaluated != agent
        {
            continue;
        }
        let art =
            run_matchup_with_import(&config, &matchup, std::sync::Arc::clone(&backend), Some(&model))
                .map_err(map_run_error)?;
        cells.push(art.cell.clone());
        artifacts.push(art);
    }
    if cells.is_empty() {
        return Err(CliError::Config(format!(
            "no matchup evaluates som agent '{agent}'"
        )));
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
    write_outputs(out, &snapshot, overrides, &report, &artifacts)?;
    let freeze_violations: u32 = artifacts.iter().map(|a| a.freeze_violations).sum();
    if freeze_violations > 0 {
        return Err(CliError::Invariant(format!(
            "{freeze_violations} frozen model(s) changed during evaluation"
        )));
    }
    Ok(())
}

/// Final model archives written by a run, keyed by file stem.
pub fn read_model_archives(out: &Path) -> Result<BTreeMap<String, Vec<u8>>, CliError> {
    let mut archives = BTreeMap::new();
    let dir = out.join("models");
    if dir.exists() {
        for entry in fs::read_dir(&dir)? {
            let entry = entry?;
            let name = entry.file_name().to_string_lossy().into_owned();
            archives.insert(name, fs::read(entry.path())?);
        }
    }
    Ok(archives)
}
