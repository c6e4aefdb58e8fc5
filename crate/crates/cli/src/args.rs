use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(name = "binclust", version, about = "Sparse Bernoulli mixture clustering", args_override_self = true)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Serialize)]
pub struct GlobalArgs {
    /// Master random seed.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Directory for output files (created if missing).
    #[arg(long, global = true, default_value = "binclust-out")]
    pub out_dir: PathBuf,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// File of `key = value` lines mirroring the long flags. Flags given on
    /// the command line take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum Command {
    /// Calibrate the PC prior on alpha1 and tabulate the induced K+ prior.
    #[command(args_override_self = true)]
    Elicit(ElicitArgs),
    /// Run the sampler on a binary dataset.
    #[command(args_override_self = true)]
    Fit(FitArgs),
    /// Summarize allocation draws.
    #[command(args_override_self = true)]
    Summarize(SummarizeArgs),
    /// Simulate a synthetic dataset.
    #[command(args_override_self = true)]
    Simulate(SimulateArgs),
    /// Replicated simulation study over several model arms.
    #[command(args_override_self = true)]
    Study(StudyArgs),
    /// Binarize and cluster the optdigits handwritten digits.
    #[command(args_override_self = true)]
    Digits(DigitsArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct PriorArgs {
    /// Number of mixture components.
    #[arg(long = "K", default_value_t = 15)]
    pub k: usize,
    /// Soft upper bound on the number of clusters.
    #[arg(long = "U", default_value_t = 5)]
    pub u: usize,
    #[arg(long, default_value_t = 0.01)]
    pub alpha2: f64,
    /// Target P(K+ < U) for calibrating the PC rate.
    #[arg(long, default_value_t = 0.5)]
    pub tp: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct ElicitArgs {
    #[command(flatten)]
    pub prior: PriorArgs,
    /// Number of units.
    #[arg(long = "N", default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 100_000)]
    pub n_mc: usize,
    #[arg(long, default_value_t = 0.02)]
    pub tol: f64,
    /// Also find the symmetric Dirichlet alpha with the closest induced prior.
    #[arg(long)]
    pub match_symmetric: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct FitArgs {
    /// Binary data CSV (optional `id` column and header).
    #[arg(long)]
    pub data: PathBuf,
    /// Variable-level factors, one row per variable.
    #[arg(long)]
    pub covariates: Option<PathBuf>,
    #[command(flatten)]
    pub prior: PriorArgs,
    /// Tabulated prior density for alpha1 (columns alpha1, density).
    #[arg(long, conflicts_with = "symmetric_alpha")]
    pub density_file: Option<PathBuf>,
    /// Fit the symmetric Dirichlet(alpha) model instead.
    #[arg(long)]
    pub symmetric_alpha: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub iters: usize,
    /// Initial annealing temperature.
    #[arg(long, default_value_t = 5.0)]
    pub t1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub proposal_sd_alpha1: f64,
    #[arg(long, default_value_t = 0.3)]
    pub proposal_sd_beta: f64,
    /// Include the (K - U) alpha2 term in the alpha1 likelihood.
    #[arg(long)]
    pub exact_alpha1_lik: bool,
    /// Independent chains, written to `chain_<c>` subdirectories when > 1.
    #[arg(long, default_value_t = 1)]
    pub chains: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct SummarizeArgs {
    /// Allocation draws, one row per draw.
    #[arg(long)]
    pub samples: PathBuf,
    /// CHIPS probability threshold.
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,
    /// Threshold grid size for the AUChips curve.
    #[arg(long, default_value_t = 21)]
    pub grid: usize,
    /// True labels; adds the ARI of the point estimate.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, default_value_t = binclust::summary::DEFAULT_RESTARTS)]
    pub restarts: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    /// 1: pi ~ Uniform(0,1); 2: pi ~ Beta(1/3, 1).
    #[arg(long, default_value_t = 1)]
    pub scenario: u32,
    #[arg(long = "N", default_value_t = 100)]
    pub n: usize,
    #[arg(long = "P", default_value_t = 20)]
    pub p: usize,
    /// Number of generating clusters.
    #[arg(long, default_value_t = 2)]
    pub kplus: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct StudyArgs {
    #[arg(long, default_value_t = 1)]
    pub scenario: u32,
    #[arg(long = "N", default_value_t = 100)]
    pub n: usize,
    #[arg(long = "P", default_value_t = 20)]
    pub p: usize,
    #[arg(long, default_value_t = 2)]
    pub kplus: usize,
    #[arg(long, default_value_t = 50)]
    pub datasets: usize,
    #[arg(long = "K", default_value_t = 15)]
    pub k: usize,
    /// Comma-separated arms: `afmm:<U>`, `sfmm:<alpha>`, `oracle`.
    /// Defaults to afmm:2,5,10 and sfmm:0.01,0.1,0.5.
    #[arg(long, value_delimiter = ',')]
    pub arms: Vec<String>,
    /// Iterations per fit; defaults to the desk-scale run length.
    #[arg(long)]
    pub iters: Option<usize>,
    /// Use the full-length protocol (10,000 iterations).
    #[arg(long)]
    pub paper_scale: bool,
    #[arg(long, default_value_t = 0.5)]
    pub tp: f64,
    #[arg(long, default_value_t = 0.01)]
    pub alpha2: f64,
    #[arg(long, default_value_t = binclust::summary::DEFAULT_RESTARTS)]
    pub restarts: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct DigitsArgs {
    /// optdigits file (64 pixel columns then the label).
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long = "K", default_value_t = 15)]
    pub k: usize,
    #[arg(long = "U", default_value_t = 10)]
    pub u: usize,
    #[arg(long, default_value_t = 0.01)]
    pub alpha2: f64,
    #[arg(long, default_value_t = 0.1)]
    pub tp: f64,
    #[arg(long, default_value_t = 10_000)]
    pub iters: usize,
    #[arg(long, default_value_t = binclust::summary::DEFAULT_RESTARTS)]
    pub restarts: usize,
}
