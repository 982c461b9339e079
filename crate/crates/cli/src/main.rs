//! `vk-ribbon`: run one experiment from a TOML configuration and write CSV
//! tables, two-column plot files and a manifest into the output directory.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use config::ExperimentConfig;
use error::CliError;
use output::RunOutput;

#[derive(Parser)]
#[command(name = "vk-ribbon", version, about = "Narrow-strip plate and ribbon experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML configuration; built-in defaults are used when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for element assembly and sweep rows.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Tabulate Q1, Q0, Q̄ and α± against the isotropic closed forms.
    Density,
    /// Compare α± from the pencil with a sampled estimate.
    Alpha,
    /// Minimize the ribbon functional of `model.kind`.
    Minimize1d,
    /// Plate minima and recovery energies against the ribbon minimum.
    GammaSweep,
    /// Energies of the explicit recovery fields as eps decreases.
    Recovery,
    /// Finite-difference check of the ribbon gradient on random fields.
    Gradcheck,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Density => "density",
            Command::Alpha => "alpha",
            Command::Minimize1d => "minimize1d",
            Command::GammaSweep => "gamma-sweep",
            Command::Recovery => "recovery",
            Command::Gradcheck => "gradcheck",
        }
    }

    fn run(self, cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
        match self {
            Command::Density => commands::density(cfg),
            Command::Alpha => commands::alpha(cfg),
            Command::Minimize1d => commands::minimize1d(cfg),
            Command::GammaSweep => commands::gamma_sweep_cmd(cfg),
            Command::Recovery => commands::recovery(cfg),
            Command::Gradcheck => commands::gradcheck(cfg),
        }
    }
}

fn load_config(path: Option<&PathBuf>) -> Result<ExperimentConfig, CliError> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::config(format!("cannot read {}: {e}", p.display())))?;
            ExperimentConfig::parse(&text)
        }
        None => {
            let cfg = ExperimentConfig::default();
            cfg.validate()?;
            Ok(cfg)
        }
    }
}

fn run(cli: &Cli) -> Result<serde_json::Value, CliError> {
    let cfg = load_config(cli.config.as_ref())?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::config("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::config(format!("thread pool: {e}")))?;
    }
    let dir = cli.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    let out = cli.command.run(&cfg)?;
    let files = output::write_all(&dir, cli.command.name(), &cfg, cli.threads, &out)?;

    let failed: Vec<_> = out.checks.iter().filter(|c| !c.pass).cloned().collect();
    if !failed.is_empty() {
        return Err(CliError::Assertion(failed));
    }
    Ok(json!({
        "status": "ok",
        "command": cli.command.name(),
        "files": files,
        "checks": out.checks,
        "notes": out.notes,
    }))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
