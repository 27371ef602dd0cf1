mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use boostdyn::boosting::{BaseLearner, Variant};
use boostdyn::data::Setting;
use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "boostdyn", version, about = "Boosting weight-trace experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset.
    Gen(GenArgs),
    /// Boost on a dataset and record weight traces and per-point statistics.
    Trace(TraceArgs),
    /// Smooth per-point entropies into a raster.
    Field(FieldArgs),
    /// Run the active-sampling comparison.
    Sample(SampleArgs),
    /// Compare a model trained on all points with one trained on hard points only.
    CompareModels(CompareArgs),
}

#[derive(Debug, Args)]
struct OutArgs {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Overwrite existing outputs.
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Args)]
struct BoostArgs {
    #[arg(long, default_value = "resample")]
    variant: Variant,
    /// `stump`, `tree` or `tree:<depth>`.
    #[arg(long, default_value = "tree")]
    learner: BaseLearner,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    setting: Setting,
    /// Total number of points.
    #[arg(long)]
    n: Option<usize>,
    /// Points per Gaussian component.
    #[arg(long)]
    n_per: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 5000)]
    iterations: usize,
    #[command(flatten)]
    boost: BoostArgs,
    /// Rounds in the first KS sample (default 3/5 of the run).
    #[arg(long)]
    split: Option<usize>,
    /// Histogram bins on [0, 1] for the trace entropy.
    #[arg(long, default_value_t = 1000)]
    bins: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
pub struct FieldArgs {
    #[arg(long)]
    stats: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Overrides the setting read from the dataset sidecar.
    #[arg(long)]
    setting: Option<Setting>,
    #[arg(long)]
    bandwidth: Option<f64>,
    /// Raster size as `NXxNY`.
    #[arg(long)]
    grid: Option<String>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    setting: Setting,
    /// Comma-separated `random`, `entropy[:q]`, `margin[:pool]`.
    #[arg(long, default_value = "random,entropy,margin")]
    strategies: String,
    #[arg(long, default_value_t = 40)]
    initial: usize,
    #[arg(long, default_value_t = 10)]
    batch: usize,
    #[arg(long, default_value_t = 1000)]
    cap: usize,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    #[arg(long, default_value_t = 10_000)]
    test_size: usize,
    /// Boosting rounds per retraining.
    #[arg(long, default_value_t = 1000)]
    iterations: usize,
    #[command(flatten)]
    boost: BoostArgs,
    #[arg(long)]
    bandwidth: Option<f64>,
    #[arg(long)]
    grid: Option<String>,
    /// Superlevel quantile for a bare `entropy` strategy.
    #[arg(long)]
    quantile: Option<f64>,
    /// Candidate pool for a bare `margin` strategy.
    #[arg(long)]
    pool: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    data: PathBuf,
    /// Stats CSV whose partition column selects the hard points.
    #[arg(long)]
    stats: PathBuf,
    #[arg(long, default_value_t = 5000)]
    iterations: usize,
    #[command(flatten)]
    boost: BoostArgs,
    #[arg(long, default_value_t = 10_000)]
    test_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => commands::gen(a),
        Command::Trace(a) => commands::trace(a),
        Command::Field(a) => commands::field(a),
        Command::Sample(a) => commands::sample(a),
        Command::CompareModels(a) => commands::compare_models(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
