//! `electromech`: runs one scenario from a config file and writes its reports.

mod config;
mod output;
mod scenarios;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use electromech::{Error, Exec};

use config::{Scenario, ScenarioConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Both,
}

#[derive(Debug, Parser)]
#[command(name = "electromech", version, about = "Electromechanical cooling, teleportation and spin-phonon scenarios")]
struct Cli {
    /// Scenario to run; may instead be given by `scenario =` in the config.
    #[arg(value_parser = |s: &str| s.parse::<Scenario>())]
    scenario: Option<Scenario>,
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides `seed =` in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Fock truncation override, e.g. `mech=12`. Repeatable.
    #[arg(long = "truncation", value_name = "NAME=DIM")]
    truncation: Vec<String>,
    #[arg(long, value_enum, default_value_t = Format::Both)]
    format: Format,
    /// Worker threads for sweeps; 1 runs sequentially.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

const EXIT_RUNTIME: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_PHYSICS: u8 = 3;
const EXIT_VERIFICATION: u8 = 4;

fn runtime_code(err: &Error) -> u8 {
    match err {
        Error::Parse { .. } | Error::InvalidParameter { .. } => EXIT_CONFIG,
        Error::Precondition(_)
        | Error::TruncationOverflow { .. }
        | Error::Leakage { .. }
        | Error::DegenerateSteadyState(_)
        | Error::DimensionCap { .. }
        | Error::ZeroProbabilityBranch(_) => EXIT_PHYSICS,
        Error::Verification(_) => EXIT_VERIFICATION,
        _ => EXIT_RUNTIME,
    }
}

fn load(cli: &Cli) -> Result<ScenarioConfig, String> {
    let text = match &cli.config {
        Some(path) => std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?,
        None => String::new(),
    };
    let origin = cli.config.as_ref().map_or("<args>".to_string(), |p| p.display().to_string());
    let mut cfg = ScenarioConfig::parse(&text, cli.scenario).map_err(|e| format!("{origin}: {e}"))?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    for spec in &cli.truncation {
        cfg.set_truncation(spec).map_err(|e| format!("--truncation: {e}"))?;
    }
    if cli.jobs == 0 {
        return Err("--jobs must be at least 1".into());
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let cfg = match load(&cli) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let exec = if cli.jobs > 1 { Exec::Parallel } else { Exec::Sequential };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build() {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    };
    let artifacts = match pool.install(|| scenarios::run(&cfg, exec)) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {} failed: {e}", cfg.scenario);
            return ExitCode::from(runtime_code(&e));
        }
    };
    if let Err(e) = output::write_all(&cli.out, &artifacts, cli.format) {
        eprintln!("error: writing {}: {e}", cli.out.display());
        return ExitCode::from(EXIT_RUNTIME);
    }
    if let Some(text) = &artifacts.stdout {
        print!("{text}");
    }
    if artifacts.verification_failed {
        eprintln!("error: oracle verification failed");
        return ExitCode::from(EXIT_VERIFICATION);
    }
    ExitCode::SUCCESS
}
