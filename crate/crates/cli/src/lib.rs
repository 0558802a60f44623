//! `splab`: runs the laboratory's experiments from JSON configs.
//!
//! Every subcommand writes into `<out>/<config-hash prefix>/`, one CSV per
//! table plus a `.meta.json` sidecar holding the hash, seed, version and
//! timestamp. CSV bodies depend only on the config.

mod commands;
pub mod config;
mod error;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::ExperimentConfig;
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "splab", version, about = "Spectral inequality laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// JSON experiment config.
    #[arg(long)]
    pub config: PathBuf,
    /// Root for run directories; overrides `output.dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigenvalues, counting function and the eigensystem cache.
    Spectrum(RunArgs),
    /// Localization radii and weighted decay checks.
    Decay(RunArgs),
    /// Realise the sensor mask and verify every cell.
    Sensors(RunArgs),
    /// Observability ratio c(lambda) and its fitted exponent.
    RatioScan(RunArgs),
    /// Extension identities, H^1 sandwich and geometric constants.
    GhostCheck(RunArgs),
    /// Heat observability constant, bounds and null controls.
    Observability(RunArgs),
    /// Aggregate earlier tables of the same config into report.json.
    Report(RunArgs),
}

impl Command {
    fn parts(&self) -> (&'static str, &RunArgs) {
        match self {
            Command::Spectrum(a) => ("spectrum", a),
            Command::Decay(a) => ("decay", a),
            Command::Sensors(a) => ("sensors", a),
            Command::RatioScan(a) => ("ratio-scan", a),
            Command::GhostCheck(a) => ("ghost-check", a),
            Command::Observability(a) => ("observability", a),
            Command::Report(a) => ("report", a),
        }
    }
}

#[derive(Debug)]
pub struct Outcome {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let (name, args) = cli.command.parts();
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let root = args
        .out
        .clone()
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("runs"));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.unwrap_or(0))
        .build()?;
    pool.install(|| {
        let dir = output::RunDir::create(&root, &cfg, name)?;
        let files = match cli.command {
            Command::Spectrum(_) => commands::spectrum(&cfg, &dir),
            Command::Decay(_) => commands::decay(&cfg, &dir),
            Command::Sensors(_) => commands::sensors(&cfg, &dir),
            Command::RatioScan(_) => commands::ratio(&cfg, &dir),
            Command::GhostCheck(_) => commands::ghost(&cfg, &dir),
            Command::Observability(_) => commands::observability(&cfg, &dir),
            Command::Report(_) => commands::report(&cfg, &dir),
        }?;
        Ok(Outcome {
            dir: dir.path().to_path_buf(),
            files,
        })
    })
}

/// Parses `args`, runs, prints, and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cli) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("{}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
