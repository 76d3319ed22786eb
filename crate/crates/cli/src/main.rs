//! Command-line front end: `mixdiff run <config.json> [--out DIR] [--seed N]`.
//!
//! Exit status is 0 when every check passes, 2 when a check fails and 1 for
//! configuration or I/O errors.

mod config;
mod report;
mod workflows;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use config::ExperimentConfig;
use report::Outcome;

/// Overrides the output root when `--out` is absent.
const OUT_ENV: &str = "MIXDIFF_OUT";
const DEFAULT_OUT: &str = "mixdiff-out";

#[derive(Parser)]
#[command(name = "mixdiff", version, about = "Mixed local/nonlocal diffusion with absorption")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed for randomised initial data.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn output_dir(flag: Option<PathBuf>, config: &ExperimentConfig) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .or_else(|| config.output.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn load(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut config = ExperimentConfig::parse(&text).with_context(|| format!("parsing {}", path.display()))?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    config.command()?;
    Ok(config)
}

fn run(path: &Path, out: Option<PathBuf>, seed: Option<u64>) -> Result<Outcome> {
    let start = Instant::now();
    let mut config = load(path, seed)?;
    let dir = output_dir(out, &config);
    config.output = Some(dir.clone());
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;

    let mut outcome = workflows::execute(&config, &dir)?;
    outcome.file("summary.txt");
    outcome.file("manifest.json");
    report::write_summary(&dir, &outcome)?;
    report::write_manifest(&dir, &config, &outcome, start.elapsed().as_secs_f64())?;
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Cmd::Run { config, out, seed } = cli.command;
    match run(&config, out, seed) {
        Ok(outcome) => {
            print!("{}", report::summary_text(&outcome));
            if outcome.passed() {
                ExitCode::SUCCESS
            } else {
                for c in outcome.failures() {
                    eprintln!("check failed: {}", c.name);
                }
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
