mod args;

use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use accepted::analytics::{self, read_questions, write_questions};
use accepted::dataset::{build_matrix, export_matrix, import_matrix, BuildConfig, FeatureMatrix, Provenance};
use accepted::ingest::parse_dump_timestamp;
use accepted::model::{
    feature_importance, kfold_cv_with, load_model, save_model, train, CvOptions, Dataset, GbdtEnsemble, Learner,
};
use accepted::pipeline::{self, PipelineError};
use accepted::tag_metrics::{per_tag_acceptance, rank_tags, write_ranking, TagMetric, TagStatsMap};
use accepted_service::{AppState, LoadedModel, QuestionDraft};
use clap::Parser;

use args::*;

/// Writes a line to stdout, ignoring a closed pipe.
macro_rules! say {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

const TAG_STATS: &str = "tag_stats.json";
const QUESTIONS: &str = "questions.csv";
const INGEST_META: &str = "ingest.meta";

/// Failure classes, mapped to exit codes 1, 2 and 3.
enum Failure {
    Usage(String),
    Data(String),
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Internal(m) => m,
        }
    }
}

fn data(e: impl Display) -> Failure {
    Failure::Data(e.to_string())
}

fn at(path: &Path) -> impl Fn(&dyn Display) -> Failure + '_ {
    move |e| Failure::Data(format!("{}: {e}", path.display()))
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        data(e)
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();

    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
        eprintln!("error: thread pool: {e}");
        return ExitCode::from(3);
    }
    let result = match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Build(a) => build(a),
        Command::Train(a) => train_cmd(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Importance(a) => importance(a),
        Command::Report(a) => report(a),
        Command::Serve(a) => serve(a, cli.threads),
        Command::Predict(a) => predict(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.code())
        }
    }
}

fn resolve(explicit: &Option<PathBuf>, dir: &Option<PathBuf>, default: &str, flag: &str) -> Result<PathBuf, Failure> {
    match (explicit, dir) {
        (Some(p), _) => Ok(p.clone()),
        (None, Some(d)) => Ok(d.join(default)),
        (None, None) => Err(Failure::Usage(format!("--{flag} or --dump-dir is required"))),
    }
}

fn ensure_dir(dir: &Path) -> Outcome {
    fs::create_dir_all(dir).map_err(|e| at(dir)(&e))
}

fn write_file(path: &Path, write: impl FnOnce(&mut dyn Write) -> Result<(), String>) -> Outcome {
    let mut out = pipeline::create(path)?;
    write(&mut out).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    out.flush().map_err(|e| at(path)(&e))
}

fn ingest(a: IngestArgs) -> Outcome {
    let posts_path = resolve(&a.dump.posts, &a.dump.dump_dir, "Posts.xml", "posts")?;
    let tags_path = resolve(&a.tags, &a.dump.dump_dir, "Tags.xml", "tags")?;
    let followers_path = resolve(&a.followers, &a.dump.dump_dir, "followers.csv", "followers")?;
    ensure_dir(&a.store)?;

    let stats = pipeline::tag_stats_from_files(&tags_path, &followers_path, a.alpha)?;
    pipeline::write_tag_stats(&a.store.join(TAG_STATS), &stats)?;

    let (posts, skipped) = pipeline::read_rows(&posts_path, accepted::ingest::parse_posts)?;
    let mut questions: Vec<_> = posts.iter().filter_map(analytics::QuestionSummary::from_post).collect();
    questions.sort_by_key(|q| q.id);
    write_file(&a.store.join(QUESTIONS), |w| write_questions(w, &questions).map_err(|e| e.to_string()))?;

    let mut meta = Provenance::default();
    meta.set("alpha", a.alpha);
    meta.set("tags", stats.len());
    meta.set("tags_without_followers", stats.values().filter(|s| !s.followers_known).count());
    meta.set("posts", posts.len());
    meta.set("posts_skipped", skipped);
    meta.set("questions", questions.len());
    meta.set("resolved", questions.iter().filter(|q| q.resolved).count());
    write_file(&a.store.join(INGEST_META), |w| meta.write(w).map_err(|e| e.to_string()))?;
    say!(
        "ingested {} tags and {} questions into {}",
        stats.len(),
        questions.len(),
        a.store.display()
    );
    Ok(())
}

fn meta_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".meta");
    PathBuf::from(name)
}

fn build(a: BuildArgs) -> Outcome {
    let posts_path = resolve(&a.dump.posts, &a.dump.dump_dir, "Posts.xml", "posts")?;
    let badges_path = resolve(&a.dump.badges, &a.dump.dump_dir, "Badges.xml", "badges")?;
    let users_path = resolve(&a.dump.users, &a.dump.dump_dir, "Users.xml", "users")?;
    let dump_end = match &a.dump_end {
        Some(raw) => Some(
            accepted_service::draft::parse_timestamp(raw)
                .or_else(|| parse_dump_timestamp(raw).ok())
                .ok_or_else(|| Failure::Usage(format!("--dump-end: not a timestamp: {raw:?}")))?,
        ),
        None => None,
    };
    let tag_stats = pipeline::read_tag_stats(&a.store.join(TAG_STATS))?;
    let posts = pipeline::read_posts(&posts_path)?;
    let askers = pipeline::asker_data(&posts, &badges_path, &users_path)?;
    let config = BuildConfig { cutoff_days: a.cutoff_days, dump_end };
    let matrix = build_matrix(&posts, &tag_stats, &askers.timelines, &askers.users, &config).map_err(data)?;

    write_file(&a.out, |w| export_matrix(&matrix, w).map_err(|e| e.to_string()))?;
    write_file(&meta_path(&a.out), |w| matrix.provenance.write(w).map_err(|e| e.to_string()))?;
    say!(
        "wrote {} rows ({} resolved, {} removed by the {}-day cutoff) to {}",
        matrix.len(),
        matrix.provenance.count("resolved"),
        matrix.provenance.count("removed_recent"),
        a.cutoff_days,
        a.out.display()
    );
    Ok(())
}

fn read_matrix(path: &Path) -> Result<FeatureMatrix, Failure> {
    import_matrix(pipeline::open(path)?).map_err(|e| at(path)(&e))
}

fn read_model(path: &Path) -> Result<GbdtEnsemble<f64>, Failure> {
    load_model(pipeline::open(path)?).map_err(|e| at(path)(&e))
}

fn checked(params: &ParamArgs) -> Result<accepted::model::GbdtParams, Failure> {
    let params = params.params();
    params.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(params)
}

fn train_cmd(a: TrainArgs) -> Outcome {
    let params = checked(&a.params)?;
    let matrix = read_matrix(&a.matrix)?;
    let model: GbdtEnsemble<f64> = train(&Dataset::from_matrix(&matrix), &params).map_err(data)?;
    write_file(&a.out, |w| save_model(&model, w).map_err(|e| e.to_string()))?;
    say!(
        "trained {} rounds x {} trees on {} rows; model {} written to {}",
        params.num_rounds,
        params.num_parallel_tree,
        matrix.len(),
        model.model_version,
        a.out.display()
    );
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> Outcome {
    let learner = match a.learner {
        LearnerArg::Gbdt => Learner::Gbdt(checked(&a.params)?),
        LearnerArg::Cart => Learner::Cart { max_depth: a.cart_depth },
    };
    let matrix = read_matrix(&a.matrix)?;
    let options = CvOptions {
        k: a.k,
        seed: a.params.params().seed,
        stratified: a.stratified,
    };
    let report = kfold_cv_with(&Dataset::<f64>::from_matrix(&matrix), &learner, &options).map_err(data)?;
    say!("{report}");
    if let Some(path) = &a.out_csv {
        write_file(path, |w| report.write_csv(w).map_err(|e| e.to_string()))?;
    }
    Ok(())
}

fn importance(a: ImportanceArgs) -> Outcome {
    let model = read_model(&a.model)?;
    let table = feature_importance(&model);
    for (i, e) in table.top(a.top).iter().enumerate() {
        say!("{:>3}  {:<28} {}", i + 1, e.feature, e.count);
    }
    if let Some(path) = &a.out {
        write_file(path, |w| table.write_csv(w).map_err(|e| e.to_string()))?;
    }
    Ok(())
}

fn report(a: ReportArgs) -> Outcome {
    use ReportName::*;
    ensure_dir(&a.out_dir)?;
    let wanted = |name: ReportName| a.name == name || a.name == All;
    let needs_store = [Trend, TagExtremes, TagRanking].into_iter().any(wanted);
    let needs_matrix = [Badges, Tagcount, Bodylen].into_iter().any(wanted);
    let store = match (&a.store, needs_store) {
        (Some(s), _) => Some(s.clone()),
        (None, true) => return Err(Failure::Usage("this report needs --store".into())),
        (None, false) => None,
    };
    let matrix = match (&a.matrix, needs_matrix) {
        (Some(m), _) => Some(read_matrix(m)?),
        (None, true) => return Err(Failure::Usage("this report needs --matrix".into())),
        (None, false) => None,
    };
    let questions = match &store {
        Some(s) if wanted(Trend) || wanted(TagExtremes) => {
            let path = s.join(QUESTIONS);
            read_questions(pipeline::open(&path)?).map_err(|e| at(&path)(&e))?
        }
        _ => Vec::new(),
    };
    let out = |name: &str| a.out_dir.join(name);
    let text = |e: analytics::AnalyticsError| e.to_string();

    if wanted(Trend) {
        let trend = analytics::yearly_trend(&questions);
        write_file(&out("trend.csv"), |w| trend.write_csv(w).map_err(text))?;
        write_file(&out("trend_plot.csv"), |w| trend.write_plot(w).map_err(text))?;
    }
    if let Some(matrix) = &matrix {
        if wanted(Badges) {
            let rows = analytics::badge_report(matrix).map_err(data)?;
            write_file(&out("badges.csv"), |w| analytics::write_conditionals(w, &rows).map_err(text))?;
            write_file(&out("badges_plot.csv"), |w| analytics::write_conditionals_plot(w, &rows).map_err(text))?;
        }
        if wanted(Tagcount) {
            let groups = analytics::probability_by_tag_count(matrix).map_err(data)?;
            write_file(&out("tagcount.csv"), |w| analytics::write_groups(w, "tag_count", &groups).map_err(text))?;
            write_file(&out("tagcount_plot.csv"), |w| analytics::write_groups_plot(w, &groups).map_err(text))?;
        }
        if wanted(Bodylen) {
            let rows = analytics::probability_by_body_length(matrix, a.body_threshold).map_err(data)?;
            write_file(&out("bodylen.csv"), |w| analytics::write_conditionals(w, &rows).map_err(text))?;
            write_file(&out("bodylen_plot.csv"), |w| analytics::write_conditionals_plot(w, &rows).map_err(text))?;
        }
    }
    if wanted(TagExtremes) {
        let rates = per_tag_acceptance(questions.iter().map(|q| (q.tags.as_slice(), q.resolved)), a.min_uses);
        let extremes = analytics::tag_acceptance_extremes(&rates, a.top_k);
        write_file(&out("tag_extremes.csv"), |w| extremes.write_csv(w).map_err(text))?;
        write_file(&out("tag_extremes_plot.csv"), |w| extremes.write_plot(w).map_err(text))?;
    }
    if wanted(TagRanking) {
        let path = store.as_ref().expect("checked above").join(TAG_STATS);
        let stats = pipeline::read_tag_stats(&path)?;
        for metric in TagMetric::ALL {
            let ranking = rank_tags(&stats, metric, a.min_count);
            write_file(&out(&format!("tag_ranking_{metric}.csv")), |w| {
                write_ranking(w, metric, &ranking).map_err(|e| e.to_string())
            })?;
        }
    }
    say!("reports written to {}", a.out_dir.display());
    Ok(())
}

fn load_serving(a: &ModelArgs) -> Result<(GbdtEnsemble<f64>, TagStatsMap<f64>), Failure> {
    let model = read_model(&a.model)?;
    let stats = pipeline::read_tag_stats(&a.tag_stats)?;
    if model.n_features() != accepted::dataset::FEATURE_COUNT {
        return Err(Failure::Data(format!(
            "{}: model has {} features, expected {}",
            a.model.display(),
            model.n_features(),
            accepted::dataset::FEATURE_COUNT
        )));
    }
    Ok((model, stats))
}

fn serve(a: ServeArgs, threads: usize) -> Outcome {
    let (model, stats) = load_serving(&a.model)?;
    let addr = format!("{}:{}", a.host, a.port)
        .parse()
        .map_err(|e| Failure::Usage(format!("--host/--port: {e}")))?;
    let state = Arc::new(AppState::new(Some(model), Some(stats)));
    let mut runtime = tokio::runtime::Builder::new_multi_thread();
    if threads > 0 {
        runtime.worker_threads(threads);
    }
    let runtime = runtime.enable_all().build().map_err(|e| Failure::Internal(e.to_string()))?;
    runtime
        .block_on(accepted_service::serve(addr, state))
        .map_err(|e| Failure::Data(format!("{addr}: {e}")))
}

fn predict(a: PredictArgs) -> Outcome {
    let (model, stats) = load_serving(&a.model)?;
    let text = fs::read_to_string(&a.draft).map_err(|e| at(&a.draft)(&e))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| at(&a.draft)(&e))?;
    let draft = QuestionDraft::from_json(&value).map_err(|errors| {
        let fields: Vec<String> = errors.iter().map(|e| format!("{} {}", e.field, e.message)).collect();
        Failure::Data(format!("{}: invalid draft: {}", a.draft.display(), fields.join("; ")))
    })?;
    let response = LoadedModel::new(model).predict(&draft, &stats, chrono::Utc::now());
    let json = serde_json::to_string_pretty(&response).map_err(|e| Failure::Internal(e.to_string()))?;
    say!("{json}");
    Ok(())
}
