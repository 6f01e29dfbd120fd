use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cubli::analysis::PoinsotMode;
use cubli::model::{build_model, CubliModel, CubliParams};
use cubli::scenario::{list_scenarios, run_scenario, RunSummary, ScenarioConfig, DT_ENV_VAR};
use cubli::Error;

#[derive(Parser)]
#[command(name = "cubli", version, about = "Vertex-balancing cube simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a built-in scenario, optionally overridden by a config file.
    Simulate {
        #[arg(long)]
        scenario: Option<String>,
        /// `key = value` scenario overrides.
        #[arg(long)]
        config: Option<PathBuf>,
        /// `key = value` physical parameters (defaults to the reference cube).
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the built-in scenarios.
    Scenarios,
    /// Run a torque-free Poinsot family.
    Poinsot {
        /// `H` for constant angular momentum, `T` for constant kinetic energy.
        #[arg(long)]
        mode: PoinsotMode,
        /// |H| in kg·m²/s or T in J.
        #[arg(long)]
        level: f64,
        #[arg(long, default_value_t = 9)]
        n: usize,
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn read(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn load_model(params: Option<&Path>) -> Result<CubliModel, Error> {
    match params {
        Some(p) => build_model(&CubliParams::from_file(p)?),
        None => Ok(CubliModel::reference()),
    }
}

fn env_dt() -> Option<String> {
    std::env::var(DT_ENV_VAR).ok().filter(|v| !v.trim().is_empty())
}

fn run(cli: Cli) -> Result<Option<RunSummary>, Error> {
    match cli.command {
        Command::Scenarios => {
            print!("{}", list_scenarios());
            Ok(None)
        }
        Command::Simulate {
            scenario,
            config,
            params,
            out,
        } => {
            let text = config.as_deref().map(read).transpose()?;
            let mut cfg = ScenarioConfig::load(scenario.as_deref(), text.as_deref(), env_dt().as_deref())?;
            if out.is_some() {
                cfg.out_dir = out;
            }
            let model = load_model(params.as_deref())?;
            run_scenario(&cfg, &model).map(Some)
        }
        Command::Poinsot {
            mode,
            level,
            n,
            params,
            out,
        } => {
            let mut cfg = ScenarioConfig::poinsot(mode, level, n);
            if let Some(dt) = env_dt() {
                let overrides = format!("dt = {dt}\n");
                cfg.dt = ScenarioConfig::load(Some(cfg.scenario.name()), Some(&overrides), None)?.dt;
            }
            cfg.out_dir = Some(out);
            let model = load_model(params.as_deref())?;
            run_scenario(&cfg, &model).map(Some)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(summary)) => {
            print!("{}", summary.to_text());
            if summary.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
