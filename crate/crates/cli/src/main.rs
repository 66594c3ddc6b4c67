//! `arucount`: simulate datasets, fit model variants and run replicated studies.
//!
//! Exit codes: 0 success, 2 invalid input or configuration, 3 a fit did not
//! converge, 4 file-system error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    Invalid(anyhow::Error),
    NotConverged(String),
    Io(anyhow::Error),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::NotConverged(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Invalid(e) | CliError::Io(e) => write!(f, "{e:#}"),
            CliError::NotConverged(msg) => f.write_str(msg),
        }
    }
}

impl From<arucount::Error> for CliError {
    fn from(e: arucount::Error) -> Self {
        match e {
            arucount::Error::Io { .. } => CliError::Io(e.into()),
            other => CliError::Invalid(other.into()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "arucount", version, about = "Integrated acoustic and point-count abundance models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate one dataset and write it as CSV files with its truth.
    Simulate(SimulateArgs),
    /// Fit a model variant to a dataset directory.
    Fit(FitArgs),
    /// Run a replicated simulation study.
    Study(StudyArgs),
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// TOML or JSON file with settings; inline flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Base scenario: `grid:<index>` (0 to 47), `covariate`, or `custom`.
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sets both the acoustic and the count site numbers.
    #[arg(long)]
    pub sites: Option<usize>,
    #[arg(long)]
    pub acoustic_sites: Option<usize>,
    #[arg(long)]
    pub count_sites: Option<usize>,
    /// Acoustic surveys per site.
    #[arg(long)]
    pub surveys: Option<usize>,
    /// Point-count visits per site.
    #[arg(long)]
    pub visits: Option<usize>,
    /// Keep a random subset of this many count sites.
    #[arg(long)]
    pub point_counts: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha0: Option<f64>,
    #[arg(long)]
    pub alpha1: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub validation_fraction: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct McmcArgs {
    #[arg(long)]
    pub chains: Option<usize>,
    /// Iterations per chain, adaptation and burn-in included.
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub burn: Option<usize>,
    #[arg(long)]
    pub adapt: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
    /// Upper bound on site abundance.
    #[arg(long)]
    pub cap: Option<u32>,
    #[arg(long)]
    pub rhat_threshold: Option<f64>,
    /// Worker threads.
    #[arg(long, env = "ARUCOUNT_WORKERS")]
    pub workers: Option<usize>,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Directory holding the dataset files.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// AV, C, AC or ACV.
    #[arg(long)]
    pub variant: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// `constant` or `log-linear`; by default log-linear iff the dataset has a covariate.
    #[arg(long)]
    pub abundance: Option<String>,
    #[command(flatten)]
    pub mcmc: McmcArgs,
    /// Also write per-site abundance draws and summaries.
    #[arg(long)]
    pub per_site: bool,
    /// Exit 0 even when R-hat is above the threshold.
    #[arg(long)]
    pub allow_nonconverged: bool,
}

#[derive(Args, Debug)]
pub struct StudyArgs {
    #[arg(value_enum)]
    pub kind: StudyKindArg,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub replicates: Option<usize>,
    /// First replicate index, for splitting a study across processes.
    #[arg(long)]
    pub first_replicate: Option<usize>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Grid filter such as `lambda=0.5,T=5`.
    #[arg(long)]
    pub filter: Option<String>,
    /// Comma-separated variants for the grid study.
    #[arg(long)]
    pub variants: Option<String>,
    /// Comma-separated point-count sizes for the sweep.
    #[arg(long)]
    pub sizes: Option<String>,
    #[command(flatten)]
    pub mcmc: McmcArgs,
    /// Published settings: 100 replicates and 3 chains of 10,000 iterations.
    #[arg(long)]
    pub full_scale: bool,
    /// Keep records already in the output directory and run only the rest.
    #[arg(long)]
    pub resume: bool,
    /// Record wall-clock time per fit (outputs then differ between runs).
    #[arg(long)]
    pub timings: bool,
}

#[derive(clap::ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyKindArg {
    /// The 48-scenario factorial grid.
    Grid,
    /// The covariate experiment over point-count subset sizes.
    PointcountSweep,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(&a),
        Command::Fit(a) => commands::fit(&a),
        Command::Study(a) => commands::study(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
