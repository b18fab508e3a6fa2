use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lexxfer::runner::{self, ExperimentConfig};

/// Zero-shot cross-lingual transfer laboratory.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated seeds replacing every seed list in the config.
    #[arg(long, value_delimiter = ',')]
    seed_override: Option<Vec<u64>>,
}

#[derive(Subcommand)]
enum Command {
    /// Write the raw corpus and label vocabulary.
    Synth(Common),
    /// Write the non-parallel split manifest.
    Split(Common),
    /// Run every configured strategy and write the results tables.
    Run(Common),
    /// Write label-distribution drift matrices.
    Drift(Common),
    /// Run teacher-student strategies and write soft-label reports.
    Softlabels {
        #[command(flatten)]
        common: Common,
        /// Only this teacher-student strategy id.
        #[arg(long)]
        strategy: Option<String>,
    },
    /// Write the machine-translation quality table.
    Mtquality(Common),
}

fn load(common: &Common) -> lexxfer::Result<(ExperimentConfig, PathBuf)> {
    let mut config = ExperimentConfig::load(&common.config)?;
    if let Some(seeds) = &common.seed_override {
        config.override_seeds(seeds);
    }
    let out = common.out.clone().unwrap_or_else(|| config.output_dir.clone());
    Ok((config, out))
}

enum Outcome {
    Done,
    Partial,
}

fn dispatch(command: &Command) -> lexxfer::Result<Outcome> {
    let report = |files: &[PathBuf]| {
        for f in files {
            println!("{}", f.display());
        }
    };
    match command {
        Command::Synth(c) => {
            let (config, out) = load(c)?;
            report(&runner::cmd_synth(&config, &out)?);
        }
        Command::Split(c) => {
            let (config, out) = load(c)?;
            report(&[runner::cmd_split(&config, &out)?]);
        }
        Command::Run(c) => {
            let (config, out) = load(c)?;
            let outcome = runner::cmd_run(&config, &out)?;
            report(&outcome.files);
            if outcome.is_partial() {
                return Ok(Outcome::Partial);
            }
        }
        Command::Drift(c) => {
            let (config, out) = load(c)?;
            report(&runner::cmd_drift(&config, &out)?.1);
        }
        Command::Softlabels { common, strategy } => {
            let (config, out) = load(common)?;
            let outcome = runner::cmd_softlabels(&config, strategy.as_deref(), &out)?;
            report(&outcome.files);
            if outcome.is_partial() {
                return Ok(Outcome::Partial);
            }
        }
        Command::Mtquality(c) => {
            let (config, out) = load(c)?;
            report(&runner::cmd_mtquality(&config, &out)?.1);
        }
    }
    Ok(Outcome::Done)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match dispatch(&cli.command) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Partial) => {
            log::warn!("some runs failed; see errors.csv");
            ExitCode::from(2)
        }
        // Config, corpus and I/O errors all stop before any results exist.
        Err(e) => {
            eprintln!("lexxfer: {e}");
            ExitCode::from(1)
        }
    }
}
