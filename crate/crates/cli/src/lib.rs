//! Command-line front end: config loading, the four commands and their CSV
//! artifacts.
//!
//! Every command computes all of its outputs in memory first and only then
//! writes them, together with a `<command>.manifest.json` describing the run.

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

pub mod commands;
pub mod manifest;
pub mod sweep;

pub use commands::Artifacts;

#[derive(Debug, Parser)]
#[command(name = "offload", version, about = "Cooperative content dissemination: analysis, simulation and load optimization")]
pub struct Cli {
    /// Worker threads for replication batches (default: all cores).
    #[arg(long, global = true, env = "OFFLOAD_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve extinction probabilities and reached fractions.
    Analyze(AnalyzeArgs),
    /// Run a Monte Carlo batch with the contact or the spatial engine.
    Simulate(SimulateArgs),
    /// Sweep the initial push count and report the minimum cellular load.
    Optimize(OptimizeArgs),
    /// Re-run a command for each value of one numeric config field.
    Sweep(SweepArgs),
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Scenario file (TOML).
    pub config: PathBuf,
    /// Directory for CSV outputs and the run manifest.
    #[arg(long, short, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Clone)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Engine {
    Contact,
    Spatial,
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::Contact => "contact",
            Engine::Spatial => "spatial",
        })
    }
}

#[derive(Debug, Args, Clone)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub opts: SimulateOpts,
}

#[derive(Debug, Args, Clone)]
pub struct SimulateOpts {
    #[arg(long, value_enum, default_value_t = Engine::Contact)]
    pub engine: Engine,
    /// Replications (default: `simulation.replications` of the config).
    #[arg(long)]
    pub reps: Option<usize>,
    /// Master seed (default: `rng_seed` of the config).
    #[arg(long, value_parser = clap::value_parser!(u64).range(..=i64::MAX as u64))]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OnOff {
    On,
    Off,
}

#[derive(Debug, Args, Clone)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub opts: OptimizeOpts,
}

#[derive(Debug, Args, Clone)]
pub struct OptimizeOpts {
    /// Erasure coding of the pushed packets.
    #[arg(long, value_enum, default_value_t = OnOff::On)]
    pub coding: OnOff,
    /// Largest push count evaluated (default and cap: N).
    #[arg(long)]
    pub max_beta: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepCommand {
    Analyze,
    Simulate,
    Optimize,
}

#[derive(Debug, Args, Clone)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    /// Config field to vary, e.g. `types[0].active_period_s`.
    #[arg(long)]
    pub param: String,
    /// Comma-separated values.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub values: Vec<String>,
    /// Command run for every value.
    #[arg(long, value_enum, default_value_t = SweepCommand::Analyze)]
    pub command: SweepCommand,
    #[command(flatten)]
    pub simulate: SimulateOpts,
    #[command(flatten)]
    pub optimize: OptimizeOpts,
}

/// Bad command-line usage, reported with exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Exit status for an error returned by [`run`].
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<UsageError>().is_some() {
        2
    } else {
        1
    }
}

/// Runs one command and writes its outputs. Returns the printed report.
pub fn run(cli: Cli) -> anyhow::Result<String> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(UsageError("--threads must be at least 1".into()).into());
        }
        // a pool may already exist when called repeatedly in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let started = Instant::now();
    let started_at = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let (name, common, artifacts) = match cli.command {
        Command::Analyze(a) => {
            let cfg = commands::load(&a.common.config)?;
            ("analyze", a.common, commands::analyze(cfg)?)
        }
        Command::Simulate(a) => {
            let cfg = commands::load(&a.common.config)?;
            ("simulate", a.common, commands::simulate(cfg, &a.opts)?)
        }
        Command::Optimize(a) => {
            let cfg = commands::load(&a.common.config)?;
            ("optimize", a.common, commands::optimize(cfg, &a.opts)?)
        }
        Command::Sweep(a) => {
            let cfg = commands::load(&a.common.config)?;
            ("sweep", a.common.clone(), sweep::sweep(cfg, &a)?)
        }
    };
    let paths = write_outputs(&common.out, &artifacts)?;
    let manifest = manifest::RunManifest::new(
        name,
        &common.config,
        &artifacts,
        &paths,
        started_at,
        started.elapsed().as_secs_f64(),
    );
    let manifest_path = common.out.join(format!("{name}.manifest.json"));
    manifest
        .write(&manifest_path)
        .with_context(|| format!("writing {}", manifest_path.display()))?;
    Ok(artifacts.report)
}

fn write_outputs(dir: &Path, artifacts: &Artifacts) -> anyhow::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    artifacts
        .files
        .iter()
        .map(|(name, bytes)| {
            let path = dir.join(name);
            std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
            Ok(path)
        })
        .collect()
}
