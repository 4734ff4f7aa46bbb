use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ggsp_experiments::config::{ExperimentConfig, ExperimentKind};
use ggsp_experiments::{run_experiment, ExperimentError, Result};

#[derive(Debug, Parser)]
#[command(name = "ggsp", version, about = "Run graph signal processing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Wiener denoising at several input SNRs.
    Denoise(RunArgs),
    /// Completion of missing (vertex, feature, hour) cells.
    Complete(RunArgs),
    /// Continuous-time recovery from irregular samples.
    Continuous(RunArgs),
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    /// JSON config; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn execute(kind: ExperimentKind, args: RunArgs) -> Result<()> {
    let cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let seed = args
        .seed
        .or(cfg.seed)
        .ok_or_else(|| ExperimentError::Config("no seed given (use --seed or the config)".into()))?;
    let out = args
        .out
        .or_else(|| cfg.out.clone())
        .ok_or_else(|| ExperimentError::Config("no output directory given (use --out or the config)".into()))?;
    log::info!("running {} with seed {seed}", kind.name());
    let outcome = run_experiment(kind, &cfg, seed)?;
    outcome.write(&out)?;
    log::info!(
        "{} finished in {:.1} s; results in {}",
        kind.name(),
        outcome.report.runtime_seconds,
        out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Denoise(a) => (ExperimentKind::Denoise, a),
        Command::Complete(a) => (ExperimentKind::Complete, a),
        Command::Continuous(a) => (ExperimentKind::Continuous, a),
    };
    match execute(kind, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
