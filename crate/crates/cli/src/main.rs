use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use som_cli::{
    cmd_export_model, cmd_import_model, cmd_report, cmd_run, cmd_validate_config, Overrides,
};

/// Multi-agent game tournaments with structured opponent modeling.
#[derive(Parser)]
#[command(name = "som", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Log verbosity: error | warn | info | debug | trace.
    #[arg(long, global = true, default_value = "warn")]
    log_level: String,
}

#[derive(Args, Clone)]
struct SharedRunArgs {
    /// Tournament config file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; all artifacts land here.
    #[arg(long)]
    out: PathBuf,
    /// Override the game seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the backend kind: scripted | http.
    #[arg(long)]
    backend: Option<String>,
    /// Max concurrent evaluation episodes.
    #[arg(long)]
    parallelism: Option<usize>,
    /// Freeze opponent models during evaluation.
    #[arg(long)]
    freeze_eval: Option<bool>,
}

impl SharedRunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            backend: self.backend.clone(),
            parallelism: self.parallelism,
            freeze_eval: self.freeze_eval,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured matchups and write report, logs and models.
    Run {
        #[command(flatten)]
        shared: SharedRunArgs,
        /// Also run the five-component ablation grid on the first matchup.
        #[arg(long)]
        ablation: bool,
    },
    /// Re-render a stored report.json.
    Report {
        /// Path to a report.json produced by `run`.
        #[arg(long)]
        input: PathBuf,
        /// Output format: table | json.
        #[arg(long, default_value = "table")]
        format: String,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a match and export the named SOM agent's model archive.
    ExportModel {
        #[command(flatten)]
        shared: SharedRunArgs,
        /// Agent name (from the config) whose model to export.
        #[arg(long)]
        agent: String,
        /// Leave the example pools out of the archive.
        #[arg(long)]
        no_pools: bool,
        /// Strip learned intermediate nodes from the graph.
        #[arg(long)]
        no_intermediates: bool,
    },
    /// Run a match with the named SOM agent starting from an archive.
    ImportModel {
        #[command(flatten)]
        shared: SharedRunArgs,
        /// Agent name (from the config) that receives the model.
        #[arg(long)]
        agent: String,
        /// Model archive to load.
        #[arg(long)]
        archive: PathBuf,
        /// Skip warm-up and keep the imported model frozen.
        #[arg(long)]
        frozen: bool,
    },
    /// Parse and validate a config file.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .parse_filters(&cli.log_level)
        .init();
    let result = match &cli.command {
        Command::Run { shared, ablation } => {
            cmd_run(&shared.config, &shared.out, &shared.overrides(), *ablation)
        }
        Command::Report { input, format, out } => cmd_report(input, format, out.as_deref()),
        Command::ExportModel {
            shared,
            agent,
            no_pools,
            no_intermediates,
        } => cmd_export_model(
            &shared.config,
            &shared.out,
            agent,
            &shared.overrides(),
            *no_pools,
            *no_intermediates,
        )
        .map(|path| println!("exported {}", path.display())),
        Command::ImportModel {
            shared,
            agent,
            archive,
            frozen,
        } => cmd_import_model(
            &shared.config,
            &shared.out,
            agent,
            archive,
            *frozen,
            &shared.overrides(),
        ),
        Command::ValidateConfig { config } => cmd_validate_config(config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("som: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
