//! `whitney`: fit, apply and evaluate minimal-distortion projections.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use whitney::ErrorKind;

#[derive(Debug, Parser)]
#[command(name = "whitney", version, about = "Minimal-distortion linear embeddings of point clouds")]
struct Cli {
    /// Worker threads for per-class fitting and evaluation (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Export the unit secant set of a CSV point cloud.
    Secants {
        #[arg(long)]
        input: PathBuf,
        /// The CSV file starts with a header row.
        #[arg(long)]
        header: bool,
        /// Keep only the N shortest secants per point.
        #[arg(long)]
        prune: Option<usize>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Fit a projection to a CSV point cloud.
    Fit(FitArgs),
    /// Project a CSV point cloud with a fitted model.
    Transform {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        header: bool,
        /// Apply the model's stretch matrix after projecting, when present.
        #[arg(long)]
        apply_stretch: bool,
        #[arg(long)]
        output: PathBuf,
    },
    /// Fit one projection per digit class from IDX training files.
    ClassifyFit(ClassifyFitArgs),
    /// Evaluate fitted class models on IDX test files.
    ClassifyEval(ClassifyEvalArgs),
}

#[derive(Debug, Args)]
struct SearchArgs {
    /// Iteration cap for the pattern search.
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    /// Stop once the step length falls below this.
    #[arg(long, default_value_t = 1e-6)]
    step_tol: f64,
    /// Initial tangent-space step length.
    #[arg(long, default_value_t = 0.5)]
    initial_step: f64,
    /// Poll directions per iteration (default: min(2·k(m−k), 200)).
    #[arg(long)]
    poll: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    header: bool,
    /// Reduced dimension k.
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    prune: Option<usize>,
    #[command(flatten)]
    search: SearchArgs,
    /// Also fit a post-projection stretch.
    #[arg(long)]
    stretch: bool,
    /// Write the per-iteration trace as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct ClassifyFitArgs {
    #[arg(long)]
    train_images: PathBuf,
    #[arg(long)]
    train_labels: PathBuf,
    #[arg(long, default_value_t = whitney::classify::DEFAULT_DIM)]
    dim: usize,
    #[arg(long, default_value_t = whitney::classify::DEFAULT_PRUNE)]
    prune: usize,
    /// Use only the first N training images of each class.
    #[arg(long)]
    per_class: Option<usize>,
    #[command(flatten)]
    search: SearchArgs,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct ClassifyEvalArgs {
    #[arg(long)]
    models_dir: PathBuf,
    #[arg(long)]
    test_images: PathBuf,
    #[arg(long)]
    test_labels: PathBuf,
    #[arg(long, default_value_t = whitney::classify::DEFAULT_NEIGHBORS)]
    neighbors: usize,
    /// Evaluate only the first N test images.
    #[arg(long)]
    limit: Option<usize>,
    /// Also report the same classifier run in the original space.
    #[arg(long)]
    raw_baseline: bool,
    #[arg(long)]
    report: Option<PathBuf>,
}

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Usage => EXIT_USAGE,
                ErrorKind::Data => EXIT_DATA,
                ErrorKind::Numerical => EXIT_NUMERICAL,
            })
        }
    }
}
