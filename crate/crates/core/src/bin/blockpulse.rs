use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use blockpulse::config::PipelineConfig;
use blockpulse::pipeline::{exit_code, run_stage, Stage};

/// Per-/24 activity reconstruction and change detection.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    stage: Command,
}

#[derive(Args)]
struct Common {
    /// key = value config file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate ground truth and probe observations from block profiles.
    Simulate(Common),
    /// Merge observer streams and rebuild per-block active counts.
    Reconstruct(Common),
    /// Flag diurnal, wide-swing and change-sensitive blocks.
    Classify(Common),
    /// Decompose change-sensitive series into trend, seasonal and residual.
    Detrend(Common),
    /// Run CUSUM on the trends and label events.
    Detect(Common),
    /// Bin events into grid cells and export daily fractions.
    Aggregate(Common),
    /// Every stage in order.
    All(Common),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    let (stage, common) = match cli.stage {
        Command::Simulate(c) => (Stage::Simulate, c),
        Command::Reconstruct(c) => (Stage::Reconstruct, c),
        Command::Classify(c) => (Stage::Classify, c),
        Command::Detrend(c) => (Stage::Detrend, c),
        Command::Detect(c) => (Stage::Detect, c),
        Command::Aggregate(c) => (Stage::Aggregate, c),
        Command::All(c) => (Stage::All, c),
    };
    let result = PipelineConfig::load(&common.config).and_then(|mut cfg| {
        if let Some(seed) = common.seed {
            cfg.seed = seed;
        }
        if let Some(out) = common.output {
            let out = std::path::absolute(&out).map_err(|e| blockpulse::Error::MissingInput {
                path: out.clone(),
                reason: e.to_string(),
            })?;
            cfg.output = out.to_string_lossy().into_owned();
        }
        run_stage(stage, &cfg)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{stage}: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
