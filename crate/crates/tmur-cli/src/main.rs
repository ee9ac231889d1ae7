//! Batch command-line front end: training, evaluation, perturbation studies,
//! ablations, hyperparameter sweeps, and built-in verification checks, all
//! emitting plot-ready text artifacts.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 check failure.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tmur_core::TmurError;

#[derive(Parser)]
#[command(name = "tmur", version, about = "Evidential multi-view classification toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Train one model per seed; write per-seed artifacts and a summary.
    Train(TrainArgs),
    /// Evaluate a saved model, optionally under input perturbations.
    Eval(EvalArgs),
    /// Compare the full configuration against ablated variants.
    Ablate(AblateArgs),
    /// Train over a grid of balance/diversity weights and tabulate accuracy.
    Sweep(SweepArgs),
    /// Run a built-in verification check.
    Theory(TheoryArgs),
}

/// Hyperparameters shared by every training-style command. The balance and
/// diversity weights live on the individual commands because `sweep` accepts
/// them as grids.
#[derive(Args, Clone)]
pub struct HyperArgs {
    /// Training epochs.
    #[arg(long, default_value_t = 300)]
    pub epochs: usize,
    /// Mini-batch size.
    #[arg(long, default_value_t = 128)]
    pub batch: usize,
    /// Peak learning rate of the cosine schedule.
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    /// Weight of the per-expert evidence loss.
    #[arg(long, default_value_t = 0.3)]
    pub lambda: f64,
    /// Slack multiplier of the load-balance hinge.
    #[arg(long, default_value_t = 1.5)]
    pub rho: f64,
    /// Routing softmax temperature.
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
    /// Comma-separated expert hidden widths.
    #[arg(long, default_value = "128")]
    pub hidden: String,
    /// Width of the shared aligned feature space.
    #[arg(long, default_value_t = 32)]
    pub aligned_dim: usize,
}

#[derive(Args)]
pub struct TrainArgs {
    /// Dataset manifest file.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output directory for artifacts.
    #[arg(long)]
    pub out: PathBuf,
    /// Single training seed.
    #[arg(long, conflicts_with = "seeds")]
    pub seed: Option<u64>,
    /// Comma-separated seeds, or `five` for the protocol set.
    #[arg(long)]
    pub seeds: Option<String>,
    /// Weight of the load-balance penalty.
    #[arg(long, default_value_t = 0.05)]
    pub beta: f64,
    /// Weight of the diversity penalty.
    #[arg(long, default_value_t = 0.05)]
    pub gamma: f64,
    /// Calibration bins.
    #[arg(long, default_value_t = 15)]
    pub bins: usize,
    #[command(flatten)]
    pub hyper: HyperArgs,
}

#[derive(Args)]
pub struct EvalArgs {
    /// Saved model file.
    #[arg(long)]
    pub model: PathBuf,
    /// Dataset manifest file.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output directory for artifacts.
    #[arg(long)]
    pub out: PathBuf,
    /// Calibration bins.
    #[arg(long, default_value_t = 15)]
    pub bins: usize,
    /// Input perturbation applied to raw features before evaluation.
    #[arg(long, value_enum)]
    pub perturb: Option<PerturbKind>,
    /// Comma-separated noise levels (requires `--perturb noise`).
    #[arg(long)]
    pub sigma: Option<String>,
    /// Comma-separated per-view strength factors (requires `--perturb scale`).
    #[arg(long)]
    pub factors: Option<String>,
    /// Also emit per-expert reliability tables.
    #[arg(long)]
    pub per_view: bool,
    /// Seed for perturbation draws.
    #[arg(long, default_value_t = 3407)]
    pub seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum PerturbKind {
    /// Rescale each view by a fixed factor.
    Scale,
    /// Add Gaussian noise to every feature.
    Noise,
}

#[derive(Args)]
pub struct AblateArgs {
    /// Dataset manifest file.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output directory for artifacts.
    #[arg(long)]
    pub out: PathBuf,
    /// Which component to ablate against the full configuration.
    #[arg(long, value_enum, default_value_t = AblationChoice::All)]
    pub which: AblationChoice,
    /// Single training seed.
    #[arg(long, conflicts_with = "seeds")]
    pub seed: Option<u64>,
    /// Comma-separated seeds, or `five` for the protocol set (the default).
    #[arg(long)]
    pub seeds: Option<String>,
    /// Weight of the load-balance penalty in the full configuration.
    #[arg(long, default_value_t = 0.05)]
    pub beta: f64,
    /// Weight of the diversity penalty in the full configuration.
    #[arg(long, default_value_t = 0.05)]
    pub gamma: f64,
    #[command(flatten)]
    pub hyper: HyperArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AblationChoice {
    /// Drop the load-balance penalty.
    Bal,
    /// Drop the diversity penalty.
    Div,
    /// Route on concatenated views without attention.
    Attention,
    /// All of the above.
    All,
}

#[derive(Args)]
pub struct SweepArgs {
    /// Dataset manifest file.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output directory for artifacts.
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated grid of load-balance weights.
    #[arg(long, default_value = "0,0.05,0.1")]
    pub beta: String,
    /// Comma-separated grid of diversity weights.
    #[arg(long, default_value = "0,0.05,0.1")]
    pub gamma: String,
    /// Training seed used for every cell.
    #[arg(long, default_value_t = 3407)]
    pub seed: u64,
    #[command(flatten)]
    pub hyper: HyperArgs,
}

#[derive(Args)]
pub struct TheoryArgs {
    /// Which verification to run.
    #[arg(long, value_enum)]
    pub check: TheoryCheck,
    /// Seeds for the learning demo (`five` for the protocol set).
    #[arg(long)]
    pub seeds: Option<String>,
    /// Optional directory for report files.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum TheoryCheck {
    /// Evidence-scale bias: uncertainty falls with scale, direction fixed.
    #[value(alias = "thm1")]
    ScaleBias,
    /// Routing gap of branch-local rules on the parity instance.
    #[value(alias = "thm2")]
    RoutingGap,
    /// Trained comparison: full router vs marginal-statistics router.
    GapDemo,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

/// Usage problems come from flag values; anything touching files or dataset
/// content is a data error; failed verifications are their own class.
fn exit_code(err: &TmurError) -> u8 {
    match err {
        TmurError::Domain(_) | TmurError::Config(_) => 1,
        TmurError::Check(_) => 3,
        _ => 2,
    }
}
