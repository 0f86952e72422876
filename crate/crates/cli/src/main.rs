//! `corridor-flow`: scenario file in, CSV and JSON out.
//!
//! Exit status is 0 on success, 2 when the scenario is rejected (bad config,
//! or input outside what the model covers) and 1 on numerical failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use crate::config::{ConfigError, ScenarioConfig};

#[derive(Debug, Parser)]
#[command(name = "corridor-flow", version, about = "Stationary pedestrian densities in 1D corridors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output` in the scenario.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replace a scenario value, e.g. `continuation.ratio=0.25`.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Debug, Args)]
struct Parallel {
    #[command(flatten)]
    common: Common,
    /// Worker threads; defaults to one per core.
    #[arg(long, env = "CORRIDOR_FLOW_THREADS")]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Viscous profile by Newton continuation.
    Solve(Common),
    /// Zero-viscosity orbit of a monotone closing or opening corridor.
    Singular(Common),
    /// Closed-form profile of a straight corridor.
    Exact(Common),
    /// Layer structure over an (alpha, beta) grid.
    Sweep(Parallel),
    /// Errors against the singular limit over a list of diffusivities.
    Converge(Parallel),
    /// Geometry report of the width profile.
    Validate(Common),
}

type Runner = fn(&ScenarioConfig, &commands::Outputs) -> Result<()>;

fn run(cli: Cli) -> Result<()> {
    let (common, threads, fixed_eps, runner): (Common, Option<usize>, bool, Runner) = match cli.command {
        Command::Solve(c) => (c, None, true, commands::solve),
        Command::Singular(c) => (c, None, false, commands::singular),
        Command::Exact(c) => (c, None, true, commands::exact),
        Command::Sweep(p) => (p.common, p.threads, true, commands::sweep),
        Command::Converge(p) => (p.common, p.threads, false, commands::converge),
        Command::Validate(c) => (c, None, false, commands::validate),
    };
    if let Some(n) = threads {
        if n == 0 {
            return Err(ConfigError("--threads must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let mut config = ScenarioConfig::load(&common.config, &common.overrides)?;
    config.resolve(fixed_eps);
    let out = commands::Outputs::new(commands::out_dir(&config, common.out.as_deref()))?;
    runner(&config, &out)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let rejected = err.chain().any(|e| {
        e.is::<ConfigError>()
            || e.downcast_ref::<corridor_core::Error>()
                .is_some_and(corridor_core::Error::is_domain_rejection)
    });
    if rejected {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
