//! `ecdwit`: exact and simulated ECD witness runs and figure data export.

mod commands;
mod config;
mod error;
mod reproduce;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::reproduce::Figure;

#[derive(Parser, Debug)]
#[command(
    name = "ecdwit",
    version,
    about = "Non-Gaussian entanglement witness from ECD measurements"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration (schema "ecdwit/1").
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Seed for optimiser restarts and shot sampling; overrides optimizer.seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 uses all cores.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate the witness on a state with exact characteristic-function values.
    Witness,
    /// Regenerate the data behind a figure.
    Reproduce {
        #[arg(value_enum)]
        figure: Figure,
    },
    /// Optimise the point set for a state.
    Optimize,
    /// Simulate finite-shot qubit readout and certify from the estimates.
    Measure,
    /// Truncation, purity, entanglement measures and Wigner negativity of a state.
    StateInfo,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Witness => "witness",
            Command::Reproduce { .. } => "reproduce",
            Command::Optimize => "optimize",
            Command::Measure => "measure",
            Command::StateInfo => "state-info",
        }
    }
}

/// Flags shared by every command, plus output helpers.
pub struct Context {
    pub out: PathBuf,
    pub seed: u64,
    pub threads: usize,
}

impl Context {
    pub fn metadata(&self, command: &str, cfg: &RunConfig) -> Value {
        json!({
            "tool": "ecdwit",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "seed": self.seed,
            "threads": self.threads,
            "config": cfg,
        })
    }

    pub fn write(&self, name: &str, text: &str) -> Result<(), CliError> {
        std::fs::write(self.out.join(name), text)?;
        Ok(())
    }

    pub fn write_json(&self, name: &str, v: &Value) -> Result<(), CliError> {
        let mut s = serde_json::to_string_pretty(v).expect("json value serialises");
        s.push('\n');
        self.write(name, &s)
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.optimizer.seed = seed;
    }
    if cli.threads > 0 {
        // fails only if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }
    std::fs::create_dir_all(&cli.out)?;
    let ctx = Context {
        out: cli.out.clone(),
        seed: cfg.optimizer.seed,
        threads: rayon::current_num_threads(),
    };
    match &cli.command {
        Command::Witness => commands::witness(&cfg, &ctx),
        Command::Optimize => commands::optimize_cmd(&cfg, &ctx),
        Command::Measure => commands::measure(&cfg, &ctx),
        Command::StateInfo => commands::state_info(&cfg, &ctx),
        Command::Reproduce { figure } => reproduce::run(*figure, &cfg, &ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ecdwit {}: {e}", cli.command.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
