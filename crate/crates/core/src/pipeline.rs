//! File-level glue: read dump files, compute tag stats and asker timelines,
//! and build the feature matrix.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::analytics::QuestionSummary;
use crate::dataset::{build_matrix, BuildConfig, DatasetError, FeatureMatrix};
use crate::history::{accepted_answer_ids, build_timelines, Timelines, Users};
use crate::ingest::{load_followers, parse_badges, parse_posts, parse_tags, parse_users, FromRow, IngestError, PostRow, RowStream};
use crate::tag_metrics::{compute_tag_stats, TagError, TagStatsMap, TimeIndexConfig};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Open { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Ingest { path: PathBuf, source: IngestError },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error(transparent)]
    Tag(#[from] TagError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

pub fn open(path: &Path) -> Result<BufReader<File>, PipelineError> {
    File::open(path)
        .map(|f| BufReader::with_capacity(1 << 16, f))
        .map_err(|source| PipelineError::Open { path: path.to_owned(), source })
}

pub fn create(path: &Path) -> Result<BufWriter<File>, PipelineError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| PipelineError::Open { path: path.to_owned(), source })
}

/// Reads every row of a dump file. Rows that fail to decode are skipped and
/// logged by the stream; XML-level errors abort.
pub fn read_rows<T: FromRow>(
    path: &Path,
    stream: fn(BufReader<File>) -> RowStream<BufReader<File>, T>,
) -> Result<(Vec<T>, u64), PipelineError> {
    let mut rows = stream(open(path)?);
    let mut out = Vec::new();
    for row in rows.by_ref() {
        match row {
            Ok(row) => out.push(row),
            Err(IngestError::Row { .. }) => {}
            Err(source) => return Err(PipelineError::Ingest { path: path.to_owned(), source }),
        }
    }
    let skipped = rows.skipped();
    if skipped > 0 {
        log::warn!("{}: skipped {skipped} malformed rows", path.display());
    }
    Ok((out, skipped))
}

pub fn read_posts(path: &Path) -> Result<Vec<PostRow>, PipelineError> {
    Ok(read_rows(path, parse_posts)?.0)
}

pub fn tag_stats_from_files(tags: &Path, followers: &Path, alpha: f64) -> Result<TagStatsMap<f64>, PipelineError> {
    let (rows, _) = read_rows(tags, parse_tags)?;
    let table = load_followers(open(followers)?).map_err(|source| PipelineError::Ingest {
        path: followers.to_owned(),
        source,
    })?;
    if table.skipped > 0 || table.duplicates > 0 {
        log::warn!(
            "{}: {} unparsable and {} duplicate entries ignored",
            followers.display(),
            table.skipped,
            table.duplicates
        );
    }
    let config = TimeIndexConfig::from_rows(alpha, &rows)?;
    Ok(compute_tag_stats(&rows, &table, &config)?)
}

pub fn write_tag_stats(path: &Path, stats: &TagStatsMap<f64>) -> Result<(), PipelineError> {
    serde_json::to_writer_pretty(create(path)?, stats).map_err(|source| PipelineError::Json { path: path.to_owned(), source })
}

pub fn read_tag_stats(path: &Path) -> Result<TagStatsMap<f64>, PipelineError> {
    serde_json::from_reader(open(path)?).map_err(|source| PipelineError::Json { path: path.to_owned(), source })
}

/// Everything needed to derive asker snapshots.
pub struct AskerData {
    pub timelines: Timelines,
    pub users: Users,
}

pub fn asker_data(posts: &[PostRow], badges: &Path, users: &Path) -> Result<AskerData, PipelineError> {
    let (awards, _) = read_rows(badges, parse_badges)?;
    let (user_rows, _) = read_rows(users, parse_users)?;
    let accepted = accepted_answer_ids(posts);
    Ok(AskerData {
        timelines: build_timelines(posts, &awards, &accepted),
        users: user_rows.into_iter().map(|u| (u.id, u.created_at)).collect(),
    })
}

/// Input files of a dump plus the follower table.
#[derive(Debug, Clone)]
pub struct DumpFiles {
    pub posts: PathBuf,
    pub tags: PathBuf,
    pub badges: PathBuf,
    pub users: PathBuf,
    pub followers: PathBuf,
}

impl DumpFiles {
    /// Standard dump file names inside `dir`, followers as `followers.csv`.
    pub fn in_dir(dir: &Path) -> Self {
        DumpFiles {
            posts: dir.join("Posts.xml"),
            tags: dir.join("Tags.xml"),
            badges: dir.join("Badges.xml"),
            users: dir.join("Users.xml"),
            followers: dir.join("followers.csv"),
        }
    }
}

/// A fully loaded dump: posts, tag stats and asker data.
pub struct LoadedDump {
    pub posts: Vec<PostRow>,
    pub tag_stats: TagStatsMap<f64>,
    pub askers: AskerData,
}

impl LoadedDump {
    pub fn load(files: &DumpFiles, alpha: f64) -> Result<Self, PipelineError> {
        let posts = read_posts(&files.posts)?;
        let tag_stats = tag_stats_from_files(&files.tags, &files.followers, alpha)?;
        let askers = asker_data(&posts, &files.badges, &files.users)?;
        Ok(LoadedDump { posts, tag_stats, askers })
    }

    pub fn matrix(&self, config: &BuildConfig) -> Result<FeatureMatrix, PipelineError> {
        Ok(build_matrix(&self.posts, &self.tag_stats, &self.askers.timelines, &self.askers.users, config)?)
    }

    pub fn questions(&self) -> Vec<QuestionSummary> {
        let mut out: Vec<QuestionSummary> = self.posts.iter().filter_map(QuestionSummary::from_post).collect();
        out.sort_by_key(|q| q.id);
        out
    }
}
