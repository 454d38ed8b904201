//! `pwdbench` — phishing-detector evasion benchmark CLI.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or config error.
//! All randomness flows from explicit seeds; reruns with identical inputs
//! produce byte-identical outputs.

mod commands;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "pwdbench",
    version,
    about = "Benchmark ML phishing-website detectors against evasion attacks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract the 57-feature representation of every page in a manifest.
    Extract {
        /// Dataset manifest (CSV: id,label,url,html_path).
        #[arg(long)]
        manifest: PathBuf,
        /// Threshold config; built-in defaults when omitted.
        #[arg(long)]
        thresholds: Option<PathBuf>,
        /// Output feature CSV.
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a labelled synthetic corpus (manifest plus HTML files).
    Synth {
        #[arg(long)]
        benign: u64,
        #[arg(long)]
        phish: u64,
        #[arg(long)]
        seed: u64,
        /// Output directory for manifest.csv and pages/.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one detector from a feature CSV.
    Train {
        /// Feature CSV produced by `extract`.
        #[arg(long)]
        features: PathBuf,
        /// Algorithm: lr, rf, or nn.
        #[arg(long)]
        algo: String,
        /// Feature set: u, r, or c.
        #[arg(long)]
        set: String,
        #[arg(long)]
        seed: u64,
        /// Output model JSON.
        #[arg(long)]
        out: PathBuf,
    },
    /// Apply one attack spec to a basis of phishing samples.
    Attack {
        /// Attack spec TOML.
        #[arg(long)]
        spec: PathBuf,
        /// Basis: dataset manifest, or feature CSV (feature-space attacks
        /// only).
        #[arg(long)]
        basis: PathBuf,
        /// Threshold config; built-in defaults when omitted.
        #[arg(long)]
        thresholds: Option<PathBuf>,
        /// Output adversarial CSV.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the full randomized-trial experiment from a config file.
    Experiment {
        /// Experiment config TOML.
        #[arg(long)]
        config: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Bound on concurrent trials (0 = one thread per core).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Render tables and charts from a persisted report.
    Report {
        /// Report JSON written by `experiment`.
        #[arg(long, name = "in")]
        input: PathBuf,
        /// Output format: text, csv, or svg.
        #[arg(long, default_value = "text")]
        format: String,
        /// Output directory (required for svg).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PWDBENCH_LOG", "warn"))
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Extract {
            manifest,
            thresholds,
            out,
        } => commands::extract(&manifest, thresholds.as_deref(), &out),
        Command::Synth {
            benign,
            phish,
            seed,
            out,
        } => commands::synth(benign, phish, seed, &out),
        Command::Train {
            features,
            algo,
            set,
            seed,
            out,
        } => commands::train(&features, &algo, &set, seed, &out),
        Command::Attack {
            spec,
            basis,
            thresholds,
            out,
        } => commands::attack(&spec, &basis, thresholds.as_deref(), &out),
        Command::Experiment {
            config,
            out,
            workers,
        } => commands::experiment(&config, &out, workers),
        Command::Report { input, format, out } => {
            commands::report(&input, &format, out.as_deref())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e.message);
            ExitCode::from(e.code)
        }
    }
}
