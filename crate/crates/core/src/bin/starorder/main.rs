//! Command-line front end: synthesis, ingestion, training, ordering,
//! evaluation, benchmarking, and rendering.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use starorder::error::Error;

use config::RunConfig;

pub mod cli {
    pub use crate::{
        BaselineArgs, BenchArgs, EvalArgs, IngestArgs, OrderArgs, RenderArgs, RenderKind,
        SynthArgs, TrainDistNetArgs, TrainOrderNetArgs,
    };
}

#[derive(Parser)]
#[command(
    name = "starorder",
    version,
    about = "Axis-order optimization for star glyph sets and RadViz plots"
)]
struct Cli {
    /// JSON run configuration; flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for pairwise distances and permutation partitions.
    /// 1 guarantees bit-reproducible runs.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a JSON-lines collection of synthetic labeled datasets.
    Synth(SynthArgs),
    /// Convert a CSV file with a label column into a dataset JSON file.
    Ingest(IngestArgs),
    /// Train the contour distance approximation network.
    TrainDistnet(TrainDistNetArgs),
    /// Train the axis-ordering policy with actor-critic REINFORCE.
    TrainOrdernet(TrainOrderNetArgs),
    /// Order one dataset with a trained policy (best-of-k decodes).
    Order(OrderArgs),
    /// Run a reference optimizer on one dataset.
    Baseline(BaselineArgs),
    /// Re-evaluate orderings; verifies recorded bench values.
    Eval(EvalArgs),
    /// Render a glyph grid or RadViz plot as SVG.
    Render(RenderArgs),
    /// Compare ordering methods over a set collection.
    Bench(BenchArgs),
}

#[derive(Args)]
pub struct SynthArgs {
    /// Output JSON-lines path.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub count: Option<usize>,
    /// Points per set (m).
    #[arg(long)]
    pub rows: Option<usize>,
    /// Coordinates per point (n).
    #[arg(long)]
    pub cols: Option<usize>,
    /// Class count (K).
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub sigma_min: Option<f64>,
    #[arg(long)]
    pub sigma_max: Option<f64>,
    #[arg(long)]
    pub mean_min: Option<f64>,
    #[arg(long)]
    pub mean_max: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub label_column: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct TrainDistNetArgs {
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub pairs: Option<usize>,
    #[arg(long)]
    pub n_min: Option<usize>,
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Contour samples per glyph fed to the network.
    #[arg(long)]
    pub contour_samples: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub holdout: Option<usize>,
    #[arg(long)]
    pub encoder_hidden: Option<usize>,
    #[arg(long)]
    pub fc_hidden: Option<usize>,
    /// Feed polygon corner points instead of uniform contour samples.
    #[arg(long)]
    pub corner_input: bool,
}

#[derive(Args)]
pub struct TrainOrderNetArgs {
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// JSON-lines training collection; otherwise sets are synthesized.
    #[arg(long)]
    pub sets: Option<PathBuf>,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long)]
    pub cols: Option<usize>,
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub sigma_min: Option<f64>,
    #[arg(long)]
    pub sigma_max: Option<f64>,
    #[arg(long)]
    pub mean_min: Option<f64>,
    #[arg(long)]
    pub mean_max: Option<f64>,
    /// Seed for the synthetic training stream (defaults from --seed).
    #[arg(long)]
    pub data_seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Separation objective: sc or db-ratio.
    #[arg(long)]
    pub objective: Option<String>,
    /// Reward distance source: exact or net.
    #[arg(long)]
    pub dist: Option<String>,
    /// Distance network model file (required with --dist net).
    #[arg(long)]
    pub distnet: Option<PathBuf>,
    /// Contour samples for the exact reward oracle.
    #[arg(long)]
    pub contour_samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub grad_clip: Option<f64>,
    #[arg(long)]
    pub checkpoint_every: Option<usize>,
    #[arg(long)]
    pub encoder_hidden: Option<usize>,
    #[arg(long)]
    pub decoder_hidden: Option<usize>,
    #[arg(long)]
    pub attention_width: Option<usize>,
    #[arg(long)]
    pub critic_hidden: Option<usize>,
    #[arg(long)]
    pub glimpse_iterations: Option<usize>,
}

#[derive(Args)]
pub struct OrderArgs {
    /// Ordering-network checkpoint.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Dataset JSON file.
    #[arg(long)]
    pub data: PathBuf,
    /// Best-of-k decode count.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub objective: Option<String>,
    #[arg(long)]
    pub dist: Option<String>,
    #[arg(long)]
    pub distnet: Option<PathBuf>,
    #[arg(long)]
    pub contour_samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct BaselineArgs {
    /// random-swap, exhaustive, salient, or identity.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub objective: Option<String>,
    #[arg(long)]
    pub contour_samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_stall: Option<usize>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    #[arg(long)]
    pub random_start: bool,
    /// Run exhaustive search beyond the coordinate budget.
    #[arg(long)]
    pub force: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct EvalArgs {
    /// Dataset JSON file (single-ordering mode).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Comma-separated ordering, e.g. "2,0,1".
    #[arg(long)]
    pub ordering: Option<String>,
    /// Bench orderings.jsonl to re-score (with --sets).
    #[arg(long)]
    pub from: Option<PathBuf>,
    #[arg(long)]
    pub sets: Option<PathBuf>,
    #[arg(long)]
    pub objective: Option<String>,
    #[arg(long)]
    pub contour_samples: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RenderKind {
    Glyphs,
    Radviz,
}

#[derive(Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum)]
    pub kind: RenderKind,
    #[arg(long)]
    pub ordering: Option<String>,
    #[arg(long)]
    pub annotate: bool,
    #[arg(long)]
    pub columns: Option<usize>,
    #[arg(long)]
    pub contour_samples: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub sets: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Comma-separated methods: identity,random-swap,salient,exhaustive,learned.
    #[arg(long)]
    pub methods: Option<String>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub distnet: Option<PathBuf>,
    #[arg(long)]
    pub dist: Option<String>,
    #[arg(long)]
    pub objective: Option<String>,
    #[arg(long)]
    pub contour_samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_stall: Option<usize>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    /// Best-of-k decodes for the learned method.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub force_exhaustive: bool,
    /// Comma-separated stall budgets; adds a random-swap sweep.
    #[arg(long)]
    pub sweep_stall: Option<String>,
}

/// Exit codes: 0 success, 1 usage, 2 data error, 3 budget or degenerate input.
fn exit_code_for(error: &Error) -> u8 {
    match error {
        Error::BudgetExceeded(_) | Error::DegenerateInput(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let first_line = e
                .to_string()
                .lines()
                .next()
                .unwrap_or("bad usage")
                .to_string();
            eprintln!("ERROR:1:{first_line}");
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };

    if cli.jobs == 0 {
        eprintln!("ERROR:1:--jobs must be at least 1");
        return ExitCode::from(1);
    }
    if let Err(e) = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build_global()
    {
        eprintln!("ERROR:2:thread pool: {e}");
        return ExitCode::from(2);
    }

    let config = match &cli.config {
        Some(path) => match RunConfig::load(path) {
            Ok(cfg) => cfg,
            Err(e) => {
                eprintln!("ERROR:2:{e}");
                return ExitCode::from(2);
            }
        },
        None => RunConfig::default(),
    };

    let result = match &cli.command {
        Command::Synth(args) => commands::run_synth(args, &config),
        Command::Ingest(args) => commands::run_ingest(args, &config),
        Command::TrainDistnet(args) => commands::run_train_distnet(args, &config),
        Command::TrainOrdernet(args) => commands::run_train_ordernet(args, &config),
        Command::Order(args) => commands::run_order(args, &config),
        Command::Baseline(args) => commands::run_baseline(args, &config),
        Command::Eval(args) => commands::run_eval(args, &config),
        Command::Render(args) => commands::run_render(args, &config),
        Command::Bench(args) => commands::run_bench(args, &config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = exit_code_for(&e);
            eprintln!("ERROR:{code}:{e}");
            ExitCode::from(code)
        }
    }
}
