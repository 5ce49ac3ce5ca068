//! Labeled feature matrix: one row of 52 submission-time features per
//! question, plus its resolved label.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{BufRead, Read, Write};

use chrono::{DateTime, Datelike, Duration, TimeZone, Timelike, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::content::{extract_content_features, ContentFeatures, CONTENT_FEATURE_NAMES};
use crate::history::{snapshot, AskerSnapshot, Timelines, Users, USER_FEATURE_NAMES};
use crate::ingest::{split_tags, PostRow};
use crate::tag_metrics::{question_tag_features, QuestionTagFeatures, TagStatsMap, TAG_FEATURE_NAMES};

pub const FEATURE_COUNT: usize = 52;

/// Bumped whenever the feature list or its order changes.
pub const FEATURE_SCHEMA_VERSION: &str = "qa-features/1";

pub const METADATA_FEATURE_NAMES: [&str; 3] =
    ["asking_day_of_week", "asking_hour", "creation_date_days"];

/// Canonical feature order: content, tag, metadata, user.
pub static FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "title_avg_word_chars",
    "title_has_wh_word",
    "body_avg_word_chars",
    "body_avg_sentence_words",
    "body_word_count",
    "link_count",
    "code_snippet_count",
    "title_word_count",
    "title_starts_capital",
    "paragraph_count",
    "title_is_interrogative",
    "title_has_error_keyword",
    "has_quote",
    "lines_of_code",
    "body_sentence_count",
    "code_chars",
    "has_list",
    "tag_count",
    "max_tag_quality",
    "avg_tag_quality",
    "max_expert_ratio",
    "min_tag_quality",
    "max_problem_rate",
    "asking_day_of_week",
    "asking_hour",
    "creation_date_days",
    "membership_duration_days",
    "prior_answers",
    "prior_questions",
    "prior_accepted_answers",
    "prior_answers_score_sum",
    "prior_questions_score_sum",
    "badge_scholar",
    "badge_tumbleweed",
    "badge_informed",
    "badge_autobiographer",
    "badge_student",
    "badge_supporter",
    "badge_editor",
    "badge_commentator",
    "badge_teacher",
    "badge_analytical",
    "badge_popular_question",
    "badge_enthusiast",
    "badge_custodian",
    "badge_good_answer",
    "badge_famous_question",
    "badge_curious",
    "badge_nice_answer",
    "badge_yearling",
    "badge_necromancer",
    "badge_notable_question",
];

pub fn feature_index(name: &str) -> Option<usize> {
    FEATURE_NAMES.iter().position(|n| *n == name)
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("post {0} is not a question")]
    NotAQuestion(u64),
    #[error("feature layout mismatch at column {index}: canonical {expected:?}, component {found:?}")]
    Layout {
        index: usize,
        expected: String,
        found: String,
    },
    #[error("matrix header mismatch at column {index}: expected {expected:?}, found {found:?}")]
    Header {
        index: usize,
        expected: String,
        found: String,
    },
    #[error("matrix row {line}: {message}")]
    Row { line: u64, message: String },
    #[error("matrix file: {0}")]
    Csv(#[from] csv::Error),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("provenance: {0}")]
    Provenance(String),
}

/// Checks that the component name lists concatenate to [`FEATURE_NAMES`].
pub fn check_layout() -> Result<(), DatasetError> {
    let components = CONTENT_FEATURE_NAMES
        .iter()
        .chain(TAG_FEATURE_NAMES.iter())
        .chain(METADATA_FEATURE_NAMES.iter())
        .chain(USER_FEATURE_NAMES.iter());
    let mut count = 0;
    for (index, (found, expected)) in components.zip(FEATURE_NAMES.iter()).enumerate() {
        count += 1;
        if found != expected {
            return Err(DatasetError::Layout {
                index,
                expected: expected.to_string(),
                found: found.to_string(),
            });
        }
    }
    if count != FEATURE_COUNT {
        return Err(DatasetError::Layout {
            index: count,
            expected: FEATURE_NAMES.get(count).unwrap_or(&"<end>").to_string(),
            found: "<end>".into(),
        });
    }
    Ok(())
}

/// Rounds to 9 significant digits, the precision the matrix file keeps.
/// Features are rounded at assembly so that a written matrix reads back
/// bit-for-bit.
pub fn canonical(value: f64) -> f64 {
    if value == 0.0 || !value.is_finite() {
        return value;
    }
    format!("{value:.8e}").parse().unwrap_or(value)
}

pub fn site_launch() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2008, 7, 31, 0, 0, 0).unwrap()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetadataFeatures {
    /// Monday = 0.
    pub asking_day_of_week: u32,
    /// UTC hour.
    pub asking_hour: u32,
    /// Days since 2008-07-31T00:00:00Z.
    pub creation_date_days: f64,
}

impl MetadataFeatures {
    pub fn at(t: DateTime<Utc>) -> Self {
        let seconds = (t - site_launch()).num_seconds().max(0);
        MetadataFeatures {
            asking_day_of_week: t.weekday().num_days_from_monday(),
            asking_hour: t.hour(),
            creation_date_days: seconds as f64 / 86_400.0,
        }
    }

    pub fn values(&self) -> [f64; 3] {
        [
            self.asking_day_of_week as f64,
            self.asking_hour as f64,
            self.creation_date_days,
        ]
    }
}

/// Concatenates the component features in canonical order, rounded.
pub fn assemble_features(
    content: &ContentFeatures,
    tags: &QuestionTagFeatures<f64>,
    metadata: &MetadataFeatures,
    asker: &AskerSnapshot,
) -> Vec<f64> {
    let mut out = Vec::with_capacity(FEATURE_COUNT);
    out.extend(content.values());
    out.extend(tags.values());
    out.extend(metadata.values());
    out.extend(asker.values());
    debug_assert_eq!(out.len(), FEATURE_COUNT);
    out.into_iter().map(canonical).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub question_id: u64,
    pub features: Vec<f64>,
    /// 1 when the question has an accepted answer.
    pub label: u8,
}

/// Key/value notes about how a matrix was produced.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Provenance(pub BTreeMap<String, String>);

impl Provenance {
    pub fn set(&mut self, key: &str, value: impl fmt::Display) {
        self.0.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn count(&self, key: &str) -> u64 {
        self.get(key).and_then(|v| v.parse().ok()).unwrap_or(0)
    }

    /// `key=value` lines in key order.
    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (key, value) in &self.0 {
            writeln!(out, "{key}={value}")?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(source: R) -> Result<Self, DatasetError> {
        let mut out = Provenance::default();
        for line in source.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| DatasetError::Provenance(format!("bad line {line:?}")))?;
            out.0.insert(key.to_string(), value.to_string());
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub names: Vec<String>,
    pub rows: Vec<FeatureVector>,
    pub provenance: Provenance,
}

impl FeatureMatrix {
    pub fn empty(provenance: Provenance) -> Self {
        FeatureMatrix {
            names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            provenance,
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.rows.iter().map(|r| r.label).collect()
    }

    pub fn row(&self, question_id: u64) -> Option<&FeatureVector> {
        self.rows
            .binary_search_by_key(&question_id, |r| r.question_id)
            .ok()
            .map(|i| &self.rows[i])
    }

    /// Value of a named feature for one row.
    pub fn value(&self, row: &FeatureVector, name: &str) -> Option<f64> {
        let index = self.names.iter().position(|n| n == name)?;
        row.features.get(index).copied()
    }
}

pub fn label(post: &PostRow) -> Result<u8, DatasetError> {
    if !post.is_question() {
        return Err(DatasetError::NotAQuestion(post.id));
    }
    Ok(u8::from(post.accepted_answer_id.is_some()))
}

/// Latest creation date across all posts.
pub fn dump_end<'a>(posts: impl IntoIterator<Item = &'a PostRow>) -> Option<DateTime<Utc>> {
    posts.into_iter().map(|p| p.creation_date).max()
}

/// Keeps questions created at least `cutoff_days` before `dump_end`.
/// Returns the kept questions and the number removed.
pub fn filter_recent<'a>(
    questions: impl IntoIterator<Item = &'a PostRow>,
    dump_end: DateTime<Utc>,
    cutoff_days: u32,
) -> (Vec<&'a PostRow>, u64) {
    let limit = dump_end - Duration::days(i64::from(cutoff_days));
    let mut removed = 0;
    let kept = questions
        .into_iter()
        .filter(|q| {
            let keep = q.creation_date <= limit;
            removed += u64::from(!keep);
            keep
        })
        .collect();
    (kept, removed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuildConfig {
    pub cutoff_days: u32,
    /// Defaults to the latest post date.
    pub dump_end: Option<DateTime<Utc>>,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            cutoff_days: 15,
            dump_end: None,
        }
    }
}

enum Assembled {
    Row(FeatureVector, bool, usize),
    Skip(&'static str),
}

/// Builds one matrix row per retained question, sorted by question id.
pub fn build_matrix(
    posts: &[PostRow],
    tag_stats: &TagStatsMap<f64>,
    timelines: &Timelines,
    users: &Users,
    config: &BuildConfig,
) -> Result<FeatureMatrix, DatasetError> {
    check_layout()?;

    let mut provenance = Provenance::default();
    provenance.set("feature_schema", FEATURE_SCHEMA_VERSION);
    provenance.set("cutoff_days", config.cutoff_days);

    let questions: Vec<&PostRow> = posts.iter().filter(|p| p.is_question()).collect();
    provenance.set("questions_seen", questions.len());
    let Some(end) = config.dump_end.or_else(|| dump_end(posts)) else {
        provenance.set("rows", 0);
        return Ok(FeatureMatrix::empty(provenance));
    };
    provenance.set("dump_end", crate::ingest::format_dump_timestamp(&end));

    let (kept, removed) = filter_recent(questions, end, config.cutoff_days);
    provenance.set("removed_recent", removed);

    let assembled: Vec<Assembled> = kept
        .par_iter()
        .map(|q| assemble_row(q, tag_stats, timelines, users))
        .collect();

    let mut rows = Vec::with_capacity(assembled.len());
    let mut skipped: BTreeMap<&str, u64> = BTreeMap::new();
    let mut unknown_askers = 0u64;
    let mut zero_filled = 0u64;
    for item in assembled {
        match item {
            Assembled::Row(row, known, filled) => {
                unknown_askers += u64::from(!known);
                zero_filled += filled as u64;
                rows.push(row);
            }
            Assembled::Skip(reason) => *skipped.entry(reason).or_default() += 1,
        }
    }
    rows.sort_by_key(|r| r.question_id);
    let mut seen = HashSet::new();
    rows.retain(|r| {
        let fresh = seen.insert(r.question_id);
        if !fresh {
            *skipped.entry("duplicate_id").or_default() += 1;
        }
        fresh
    });

    for reason in ["no_tags", "malformed_tags", "too_many_tags", "duplicate_id"] {
        provenance.set(&format!("skipped_{reason}"), skipped.get(reason).copied().unwrap_or(0));
    }
    provenance.set("unknown_askers", unknown_askers);
    provenance.set("zero_filled_tags", zero_filled);
    provenance.set("rows", rows.len());
    provenance.set("resolved", rows.iter().filter(|r| r.label == 1).count());

    Ok(FeatureMatrix {
        names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        rows,
        provenance,
    })
}

fn assemble_row(
    question: &PostRow,
    tag_stats: &TagStatsMap<f64>,
    timelines: &Timelines,
    users: &Users,
) -> Assembled {
    let tags = match split_tags(question.tags_raw.as_deref().unwrap_or("")) {
        Ok(tags) => tags,
        Err(_) => return Assembled::Skip("malformed_tags"),
    };
    if tags.is_empty() {
        return Assembled::Skip("no_tags");
    }
    let Ok(tag_features) = question_tag_features(&tags, tag_stats) else {
        return Assembled::Skip("too_many_tags");
    };
    let content = extract_content_features(
        question.title.as_deref().unwrap_or(""),
        &question.body_html,
    );
    let metadata = MetadataFeatures::at(question.creation_date);
    let (asker, known) = snapshot(question.owner_user_id, question.creation_date, timelines, users);
    let row = FeatureVector {
        question_id: question.id,
        features: assemble_features(&content, &tag_features, &metadata, &asker),
        label: u8::from(question.accepted_answer_id.is_some()),
    };
    Assembled::Row(row, known, tag_features.zero_filled)
}

fn format_value(value: f64) -> String {
    format!("{}", canonical(value))
}

/// Writes `question_id,<names>,resolved` rows.
pub fn export_matrix<W: Write>(matrix: &FeatureMatrix, sink: W) -> Result<(), DatasetError> {
    let mut writer = csv::Writer::from_writer(sink);
    let mut header = vec!["question_id".to_string()];
    header.extend(matrix.names.iter().cloned());
    header.push("resolved".into());
    writer.write_record(&header)?;
    let mut record = Vec::with_capacity(header.len());
    for row in &matrix.rows {
        record.clear();
        record.push(row.question_id.to_string());
        record.extend(row.features.iter().map(|v| format_value(*v)));
        record.push(row.label.to_string());
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads a matrix written by [`export_matrix`]. The header must match the
/// canonical feature list exactly.
pub fn import_matrix<R: Read>(source: R) -> Result<FeatureMatrix, DatasetError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(source);
    let header = reader.headers()?.clone();
    let expected: Vec<&str> = std::iter::once("question_id")
        .chain(FEATURE_NAMES.iter().copied())
        .chain(std::iter::once("resolved"))
        .collect();
    for index in 0..expected.len().max(header.len()) {
        let found = header.get(index).unwrap_or("<missing>");
        let wanted = expected.get(index).copied().unwrap_or("<none>");
        if found != wanted {
            return Err(DatasetError::Header {
                index,
                expected: wanted.to_string(),
                found: found.to_string(),
            });
        }
    }

    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i as u64 + 2;
        let record = record.map_err(|e| DatasetError::Row {
            line,
            message: e.to_string(),
        })?;
        if record.len() != expected.len() {
            return Err(DatasetError::Row {
                line,
                message: format!("{} fields, expected {}", record.len(), expected.len()),
            });
        }
        let bad = |field: &str| DatasetError::Row {
            line,
            message: format!("cannot parse {field:?}"),
        };
        let question_id = record[0].parse().map_err(|_| bad(&record[0]))?;
        let mut features = Vec::with_capacity(FEATURE_COUNT);
        for field in record.iter().skip(1).take(FEATURE_COUNT) {
            let value: f64 = field.parse().map_err(|_| bad(field))?;
            if !value.is_finite() {
                return Err(bad(field));
            }
            features.push(value);
        }
        let label = match &record[FEATURE_COUNT + 1] {
            "0" => 0,
            "1" => 1,
            other => return Err(bad(other)),
        };
        rows.push(FeatureVector {
            question_id,
            features,
            label,
        });
    }
    Ok(FeatureMatrix {
        names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        rows,
        provenance: Provenance::default(),
    })
}
