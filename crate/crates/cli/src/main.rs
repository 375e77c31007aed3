use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use firecover::harness::config::ScenarioConfig;
use firecover::harness::render::{render_svg, WorldSnapshot};
use firecover::harness::run::{run, RunOptions};

/// Simulate a UAV swarm covering and tracking a spreading wildfire.
#[derive(Debug, Parser)]
#[command(name = "firecover", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario and write CSV logs and snapshots.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long)]
        snapshot_every: Option<u64>,
        #[arg(long)]
        quiet: bool,
    },
    /// Check a scenario file without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Render a JSON world snapshot to SVG.
    Render {
        #[arg(long)]
        world: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    fn report(self) -> ExitCode {
        let (err, code) = match self {
            Failure::Config(e) => (e, 1),
            Failure::Runtime(e) => (e, 2),
        };
        eprintln!("error: {err:#}");
        ExitCode::from(code)
    }
}

fn load(path: &PathBuf) -> Result<ScenarioConfig, Failure> {
    ScenarioConfig::load(path)
        .with_context(|| format!("loading {}", path.display()))
        .map_err(Failure::Config)
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            steps,
            snapshot_every,
            quiet,
        } => {
            let mut cfg = load(&config)?;
            if let Some(seed) = seed {
                cfg.run.seed = seed;
            }
            if let Some(steps) = steps {
                cfg.run.steps = steps;
            }
            if let Some(every) = snapshot_every {
                cfg.run.snapshot_every = every;
            }
            cfg.validate()
                .context("command-line overrides")
                .map_err(Failure::Config)?;
            let summary = run(&cfg, &out, RunOptions { quiet })
                .context("simulation aborted")
                .map_err(Failure::Runtime)?;
            if !quiet {
                log::info!(
                    "finished {} steps, {} agents tracking, outputs in {}",
                    summary.steps,
                    summary.last.zeta_count,
                    out.display()
                );
            }
            Ok(())
        }
        Command::Validate { config } => {
            load(&config)?;
            println!("{}: ok", config.display());
            Ok(())
        }
        Command::Render { world, out } => {
            let text = std::fs::read_to_string(&world)
                .with_context(|| format!("reading {}", world.display()))
                .map_err(Failure::Config)?;
            let snap: WorldSnapshot = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", world.display()))
                .map_err(Failure::Config)?;
            std::fs::write(&out, render_svg(&snap))
                .with_context(|| format!("writing {}", out.display()))
                .map_err(Failure::Runtime)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.report(),
    }
}
