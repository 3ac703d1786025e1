//! Batch experiments on surfaces with boundary, driven by TOML configs.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anosov::par::Execution;
use clap::{Parser, Subcommand};

use commands::{Context, Failure};
use config::{ConfigError, Loaded};
use output::{Outputs, Stamp};

#[derive(Parser, Debug)]
#[command(name = "anosov", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `out` from the config, then `./out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 1 runs everything sequentially.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exit positions, angles, times and windings of boundary entries.
    Lens(Common),
    /// Marked boundary distance tables and winding sweeps.
    Distance(Common),
    /// Conformal factor with prescribed scalar curvature change.
    Prescribe(Common),
    /// Negatively curved collar attached to a convex boundary circle.
    Extend(Common),
    /// Convexity, conjugate points, trapped fraction and Lyapunov growth.
    Diagnose(Common),
}

fn setup(common: &Common) -> Result<Context, Failure> {
    let loaded = Loaded::read(&common.config)?;
    let seed = common.seed.unwrap_or(loaded.config.seed);
    let threads = common.threads.or(loaded.config.threads);
    let exec = match threads {
        Some(0) => return Err(ConfigError::new("threads", "must be at least 1").into()),
        Some(1) => Execution::Sequential,
        Some(n) => {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| Failure::Compute(e.to_string()))?;
            Execution::Parallel
        }
        None => Execution::Parallel,
    };
    let dir = common
        .out
        .clone()
        .or_else(|| loaded.config.out.as_ref().map(|o| loaded.dir.join(o)))
        .unwrap_or_else(|| PathBuf::from("out"));
    let out = Outputs::new(&dir, Stamp::new(seed, &loaded.hash))?;
    Ok(Context {
        loaded,
        out,
        seed,
        exec,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, run): (&Common, fn(&Context) -> Result<(), Failure>) = match &cli.command {
        Command::Lens(c) => (c, commands::lens::run),
        Command::Distance(c) => (c, commands::distance::run),
        Command::Prescribe(c) => (c, commands::prescribe::run),
        Command::Extend(c) => (c, commands::extend::run),
        Command::Diagnose(c) => (c, commands::diagnose::run),
    };
    match setup(common).and_then(|ctx| run(&ctx)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
