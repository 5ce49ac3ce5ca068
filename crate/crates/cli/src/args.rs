use std::path::PathBuf;

use accepted::model::GbdtParams;
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Predict whether Q&A questions get an accepted answer: ingest a data dump,
/// build the 52-feature matrix, train and evaluate boosted trees, report
/// statistics and serve what-if predictions.
#[derive(Debug, Parser)]
#[command(name = "accepted", version)]
pub struct Cli {
    /// Worker threads for parallel stages (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    /// Log progress to stderr (repeat for more detail).
    #[arg(long, short, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse tags and followers into tag stats, and index all questions.
    Ingest(IngestArgs),
    /// Build the feature matrix from a dump and an ingested store.
    Build(BuildArgs),
    /// Train the boosted-tree model on a feature matrix.
    Train(TrainArgs),
    /// k-fold cross-validated AUC on a feature matrix.
    Evaluate(EvaluateArgs),
    /// Split-count feature importance of a trained model.
    Importance(ImportanceArgs),
    /// Write analytics reports as CSV plus plot data.
    Report(ReportArgs),
    /// Serve the prediction API.
    Serve(ServeArgs),
    /// Predict one draft from a JSON file without a server.
    Predict(PredictArgs),
}

/// Dump file locations. Each file defaults to its standard name inside
/// `--dump-dir`.
#[derive(Debug, Args)]
pub struct DumpArgs {
    /// Directory holding Posts.xml, Tags.xml, Badges.xml, Users.xml and followers.csv.
    #[arg(long)]
    pub dump_dir: Option<PathBuf>,
    #[arg(long)]
    pub posts: Option<PathBuf>,
    #[arg(long)]
    pub badges: Option<PathBuf>,
    #[arg(long)]
    pub users: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub dump: DumpArgs,
    #[arg(long)]
    pub tags: Option<PathBuf>,
    /// CSV with header `tag,followers`.
    #[arg(long)]
    pub followers: Option<PathBuf>,
    /// Scale constant of the tag time index.
    #[arg(long, default_value_t = accepted::tag_metrics::DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Output directory for tag_stats.json, questions.csv and ingest.meta.
    #[arg(long)]
    pub store: PathBuf,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[command(flatten)]
    pub dump: DumpArgs,
    /// Directory written by `ingest`.
    #[arg(long)]
    pub store: PathBuf,
    /// Drop questions created within this many days of the dump end.
    #[arg(long, default_value_t = 15)]
    pub cutoff_days: u32,
    /// Dump end timestamp (default: latest post).
    #[arg(long)]
    pub dump_end: Option<String>,
    /// Matrix CSV; provenance goes to `<out>.meta`.
    #[arg(long)]
    pub out: PathBuf,
}

/// Hyperparameter overrides; unset flags keep the defaults.
#[derive(Debug, Args, Default)]
pub struct ParamArgs {
    /// Learning rate [default: 0.56]
    #[arg(long)]
    pub eta: Option<f64>,
    /// Maximum tree depth [default: 20]
    #[arg(long)]
    pub max_depth: Option<usize>,
    /// Minimum hessian sum per child [default: 1]
    #[arg(long)]
    pub min_child_weight: Option<f64>,
    /// Minimum split gain [default: 15]
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Share of features sampled per tree [default: 0.5]
    #[arg(long)]
    pub colsample_bytree: Option<f64>,
    /// Trees averaged per round [default: 8]
    #[arg(long)]
    pub num_parallel_tree: Option<usize>,
    /// L2 penalty on leaf weights [default: 1]
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Boosting rounds [default: 100]
    #[arg(long)]
    pub num_rounds: Option<usize>,
    /// Seed for column sampling and fold assignment [default: 42]
    #[arg(long)]
    pub seed: Option<u64>,
}

impl ParamArgs {
    pub fn params(&self) -> GbdtParams {
        let d = GbdtParams::default();
        GbdtParams {
            eta: self.eta.unwrap_or(d.eta),
            max_depth: self.max_depth.unwrap_or(d.max_depth),
            min_child_weight: self.min_child_weight.unwrap_or(d.min_child_weight),
            gamma: self.gamma.unwrap_or(d.gamma),
            colsample_bytree: self.colsample_bytree.unwrap_or(d.colsample_bytree),
            num_parallel_tree: self.num_parallel_tree.unwrap_or(d.num_parallel_tree),
            lambda: self.lambda.unwrap_or(d.lambda),
            num_rounds: self.num_rounds.unwrap_or(d.num_rounds),
            seed: self.seed.unwrap_or(d.seed),
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub params: ParamArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LearnerArg {
    Gbdt,
    Cart,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Keep class proportions equal across folds.
    #[arg(long)]
    pub stratified: bool,
    #[arg(long, value_enum, default_value_t = LearnerArg::Gbdt)]
    pub learner: LearnerArg,
    /// Depth of the CART baseline.
    #[arg(long, default_value_t = 10)]
    pub cart_depth: usize,
    /// Per-fold rows `fold,size,auc`.
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
    #[command(flatten)]
    pub params: ParamArgs,
}

#[derive(Debug, Args)]
pub struct ImportanceArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Table `rank,feature,count`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Rows printed to stdout.
    #[arg(long, default_value_t = 20)]
    pub top: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportName {
    Trend,
    Badges,
    Tagcount,
    Bodylen,
    TagExtremes,
    TagRanking,
    All,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(value_enum)]
    pub name: ReportName,
    /// Directory written by `ingest` (trend, tag-extremes, tag-ranking).
    #[arg(long)]
    pub store: Option<PathBuf>,
    /// Feature matrix (badges, tagcount, bodylen).
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Minimum questions per tag for tag-extremes.
    #[arg(long, default_value_t = 1000)]
    pub min_uses: u64,
    /// Length of each tag-extremes list.
    #[arg(long, default_value_t = 10)]
    pub top_k: usize,
    /// Minimum tag count for tag-ranking.
    #[arg(long, default_value_t = 0)]
    pub min_count: u64,
    /// Word threshold of the body-length report.
    #[arg(long, default_value_t = accepted::analytics::DEFAULT_BODY_THRESHOLD)]
    pub body_threshold: usize,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// tag_stats.json written by `ingest`.
    #[arg(long)]
    pub tag_stats: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Draft JSON: title, body_html, tags, optional asked_at and asker.
    #[arg(long)]
    pub draft: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
}
