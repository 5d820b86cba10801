use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Bayesian spatio-temporal CAR clustering.
#[derive(Debug, Parser)]
#[command(name = "bstc", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the sampler and write the draws directory.
    Fit(FitArgs),
    /// Generate a synthetic dataset on a tiled grid.
    Simulate(SimulateArgs),
    /// Point estimate of the partition from stored draws.
    Summarize(SummarizeArgs),
    /// WAIC from stored draws and, optionally, one-step-ahead refits.
    Metrics(MetricsArgs),
    /// Moran's I and Geary's C of the response.
    Explore(ExploreArgs),
}

#[derive(Debug, Args)]
pub struct PanelArgs {
    /// Long-format panel CSV.
    #[arg(long)]
    pub panel: PathBuf,
    /// Edge-list CSV with header `unit_a,unit_b`.
    #[arg(long)]
    pub adj: PathBuf,
    #[arg(long, default_value = "unit")]
    pub unit_col: String,
    #[arg(long, default_value = "time")]
    pub time_col: String,
    #[arg(long, default_value = "y")]
    pub response_col: String,
    /// Comma-separated predictor columns (default: every remaining column).
    #[arg(long, value_delimiter = ',')]
    pub predictors: Option<Vec<String>>,
    /// Center and scale the response and predictors before fitting.
    #[arg(long)]
    pub standardize: bool,
}

#[derive(Debug, Args)]
pub struct SamplerArgs {
    /// Plain-text `key = value` sampler configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Start from the multi-chain preset (25 chains, 5000 burn-in, 4000 kept each).
    #[arg(long)]
    pub multi_chain_preset: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
    /// Number of chains run in parallel.
    #[arg(long)]
    pub chains: Option<usize>,
    /// Extra `key=value` overrides, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Pin the allocations to this partition CSV (`unit,cluster`).
    #[arg(long)]
    pub fixed_partition: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub panel: PanelArgs,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    /// Output directory for the draws.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Preset {
    /// 10x10 rook grid with seven regions.
    Grid7,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value = "grid7")]
    pub preset: Preset,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Replace the preset's tiling (one character per cell, one line per row).
    #[arg(long)]
    pub tiling: Option<PathBuf>,
    /// Number of time points.
    #[arg(long)]
    pub times: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Loss {
    Binder,
    Gvi,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum GviScale {
    Sum,
    Mean,
}

#[derive(Debug, Args)]
pub struct SummarizeArgs {
    /// Draws directory written by `fit`.
    #[arg(long)]
    pub draws: PathBuf,
    #[arg(long, value_enum, default_value = "binder")]
    pub loss: Loss,
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    #[arg(long, default_value_t = 1.0)]
    pub b: f64,
    /// Weight of the joint-entropy term of the generalized VI loss.
    #[arg(long, value_enum, default_value = "sum")]
    pub gvi_scale: GviScale,
    /// Partition CSV to write (default: `<draws>/partition.csv`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the posterior similarity matrix.
    #[arg(long)]
    pub similarity: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Draws directory written by `fit`; WAIC is computed from it.
    #[arg(long)]
    pub draws: Option<PathBuf>,
    /// First evaluation year (1-based) of the one-step-ahead refits.
    #[arg(long, requires_all = ["panel", "adj"])]
    pub t0: Option<usize>,
    #[arg(long)]
    pub panel: Option<PathBuf>,
    #[arg(long)]
    pub adj: Option<PathBuf>,
    #[arg(long, default_value = "unit")]
    pub unit_col: String,
    #[arg(long, default_value = "time")]
    pub time_col: String,
    #[arg(long, default_value = "y")]
    pub response_col: String,
    #[arg(long, value_delimiter = ',')]
    pub predictors: Option<Vec<String>>,
    #[arg(long)]
    pub standardize: bool,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    /// Metrics CSV (`metric,year,value`).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExploreArgs {
    #[command(flatten)]
    pub panel: PanelArgs,
    /// CSV with one row per time plus the time average.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
