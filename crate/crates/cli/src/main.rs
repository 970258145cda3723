mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "cliquesel", version, about = "Algorithm selection for the maximum clique problem")]
pub struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for per-graph work.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output path; a file or directory depending on the command.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Extract the twelve global features of each graph.
    Features(InputArgs),
    /// Run the four solvers on each graph; resumes an existing outcome table.
    Solve(SolveArgs),
    /// Label instances from outcomes and features.
    Label(LabelArgs),
    /// Label, split and write one dataset variant.
    Build(BuildArgs),
    /// Fit a selector on a dataset's training split.
    Train(TrainArgs),
    /// Score a model on a dataset's test split.
    Evaluate(EvaluateArgs),
    /// Print the recommended solver for one graph.
    Predict(PredictArgs),
    /// Merge evaluation reports into one comparison table.
    Report(ReportArgs),
    /// Generate the synthetic corpus.
    GenCorpus(GenCorpusArgs),
    /// Compare analytic and numeric gradients of the neural selector.
    Gradcheck(GradcheckArgs),
}

#[derive(Args, Debug)]
pub struct InputArgs {
    /// Graph files or directories. Defaults to the configured corpus_dir.
    pub inputs: Vec<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Per-solver wall-clock limit in seconds.
    #[arg(long)]
    pub time_limit: Option<f64>,
    /// Per-solver search-node limit.
    #[arg(long)]
    pub node_limit: Option<u64>,
}

#[derive(Args, Debug)]
pub struct LabelSource {
    /// Labeled instances written by `label`.
    #[arg(long, conflicts_with_all = ["outcomes", "features"])]
    pub labels: Option<PathBuf>,
    #[arg(long, requires = "features")]
    pub outcomes: Option<PathBuf>,
    #[arg(long, requires = "outcomes")]
    pub features: Option<PathBuf>,
    /// Runtime difference, in seconds, under which solvers tie.
    #[arg(long)]
    pub tie_epsilon: Option<f64>,
    /// Keep instances every solver finishes almost instantly.
    #[arg(long)]
    pub keep_trivial: bool,
}

#[derive(Args, Debug)]
pub struct LabelArgs {
    #[arg(long)]
    pub outcomes: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub tie_epsilon: Option<f64>,
    #[arg(long)]
    pub keep_trivial: bool,
}

#[derive(Args, Debug)]
pub struct BuildArgs {
    #[command(flatten)]
    pub source: LabelSource,
    /// m1, m2 or m3.
    #[arg(long)]
    pub variant: Option<String>,
    /// Training share of the split.
    #[arg(long)]
    pub ratio: Option<f64>,
    /// Directory holding `<instance_id>.clq`; required later by the neural selector.
    #[arg(long)]
    pub graph_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Dataset directory written by `build`.
    #[arg(long)]
    pub data: PathBuf,
    /// dt, rf, knn, svm or gat.
    #[arg(long)]
    pub model: Option<String>,
    /// Encoder combination for gat: mlp-only, gcn-only, gat-only or gat-mlp.
    #[arg(long, default_value = "gat-mlp")]
    pub ablation: String,
    /// Overrides the dataset's graph directory.
    #[arg(long)]
    pub graph_dir: Option<PathBuf>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Model file written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    /// Row label in the report; defaults to the model family.
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long)]
    pub graph_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    pub graph: PathBuf,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Report files written by `evaluate`.
    #[arg(required = true)]
    pub reports: Vec<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GenCorpusArgs {
    /// TOML file with a `[[generators]]` list; defaults to the built-in corpus.
    #[arg(long)]
    pub spec: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub heads: Option<usize>,
}

/// How a command finished when it did not fail outright.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    /// Some inputs were skipped.
    Partial,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let cfg = match &cli.config {
        Some(p) => match RunConfig::load(p) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e:#}");
                return ExitCode::from(2);
            }
        },
        None => RunConfig::default(),
    };
    let jobs = cli.jobs.or(cfg.jobs).unwrap_or(0);
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
        log::warn!("thread pool: {e}");
    }
    match commands::run(&cli, &cfg) {
        Ok(Status::Success) => ExitCode::SUCCESS,
        Ok(Status::Partial) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
