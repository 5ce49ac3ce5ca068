//! Descriptive statistics over labeled questions: yearly resolution trend,
//! acceptance conditioned on badges, tag count and body length, and the
//! tags with the highest and lowest acceptance rates.
//!
//! Every report writes a CSV table and a two-column `x,y` plot variant.
//! Undefined probabilities (empty groups) are written as empty fields.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::{DateTime, Datelike, TimeZone, Utc};
use serde::Serialize;
use thiserror::Error;

use crate::dataset::FeatureMatrix;
use crate::history::{badge_index, BADGES, USER_FEATURE_NAMES};
use crate::ingest::{format_dump_timestamp, join_tags, parse_dump_timestamp, split_tags, PostRow};
use crate::tag_metrics::TagAcceptance;

pub const DEFAULT_BODY_THRESHOLD: usize = 200;

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("unknown badge {0:?}")]
    UnknownBadge(String),
    #[error("feature matrix lacks column {0:?}")]
    MissingColumn(String),
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

/// One question as recorded by ingestion: enough for trend and per-tag
/// reports without re-reading the dump.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuestionSummary {
    pub id: u64,
    pub created_at: DateTime<Utc>,
    pub resolved: bool,
    pub tags: Vec<String>,
}

impl QuestionSummary {
    /// `None` for non-questions. Malformed tag strings yield an empty list.
    pub fn from_post(post: &PostRow) -> Option<Self> {
        if !post.is_question() {
            return None;
        }
        Some(QuestionSummary {
            id: post.id,
            created_at: post.creation_date,
            resolved: post.accepted_answer_id.is_some(),
            tags: post.tags_raw.as_deref().and_then(|t| split_tags(t).ok()).unwrap_or_default(),
        })
    }
}

/// `id,creation_date,resolved,tags` with tags in dump form (`<a><b>`).
pub fn write_questions<W: Write>(sink: W, questions: &[QuestionSummary]) -> Result<(), AnalyticsError> {
    let mut out = csv::Writer::from_writer(sink);
    out.write_record(["id", "creation_date", "resolved", "tags"])?;
    for q in questions {
        out.write_record([
            q.id.to_string(),
            format_dump_timestamp(&q.created_at),
            u8::from(q.resolved).to_string(),
            join_tags(&q.tags),
        ])?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_questions<R: Read>(source: R) -> Result<Vec<QuestionSummary>, AnalyticsError> {
    let mut reader = csv::Reader::from_reader(source);
    let header = reader.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["id", "creation_date", "resolved", "tags"] {
        return Err(AnalyticsError::Row {
            line: 1,
            message: format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()),
        });
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |message: String| AnalyticsError::Row { line, message };
        let id = record[0].parse().map_err(|e| bad(format!("id: {e}")))?;
        let created_at = parse_dump_timestamp(&record[1]).map_err(|e| bad(e.to_string()))?;
        let resolved = match &record[2] {
            "0" => false,
            "1" => true,
            other => return Err(bad(format!("resolved must be 0 or 1, got {other:?}"))),
        };
        let tags = if record[3].is_empty() {
            Vec::new()
        } else {
            split_tags(&record[3]).map_err(|e| bad(e.to_string()))?
        };
        out.push(QuestionSummary { id, created_at, resolved, tags });
    }
    Ok(out)
}

fn ratio(resolved: u64, total: u64) -> Option<f64> {
    (total > 0).then(|| resolved as f64 / total as f64)
}

fn opt(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

fn plot<W: Write>(sink: W, points: impl IntoIterator<Item = (String, Option<f64>)>) -> Result<(), AnalyticsError> {
    let mut out = csv::Writer::from_writer(sink);
    out.write_record(["x", "y"])?;
    for (x, y) in points {
        out.write_record([x, opt(y)])?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YearRow {
    pub year: i32,
    pub total: u64,
    pub resolved: u64,
    pub percentage: f64,
    /// The data does not span the whole calendar year.
    pub partial_year: bool,
}

/// Resolution percentage per UTC calendar year.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct TrendReport {
    pub years: Vec<YearRow>,
}

pub fn yearly_trend(questions: &[QuestionSummary]) -> TrendReport {
    let mut counts: BTreeMap<i32, (u64, u64)> = BTreeMap::new();
    for q in questions {
        let entry = counts.entry(q.created_at.year()).or_default();
        entry.0 += 1;
        entry.1 += u64::from(q.resolved);
    }
    let first = questions.iter().map(|q| q.created_at).min();
    let last = questions.iter().map(|q| q.created_at).max();
    let years = counts
        .into_iter()
        .map(|(year, (total, resolved))| {
            let start = Utc.with_ymd_and_hms(year, 1, 1, 0, 0, 0).unwrap();
            let end = Utc.with_ymd_and_hms(year, 12, 31, 23, 59, 59).unwrap();
            YearRow {
                year,
                total,
                resolved,
                percentage: 100.0 * resolved as f64 / total as f64,
                partial_year: first.is_some_and(|f| f > start) && first.is_some_and(|f| f.year() == year)
                    || last.is_some_and(|l| l < end) && last.is_some_and(|l| l.year() == year),
            }
        })
        .collect();
    TrendReport { years }
}

impl TrendReport {
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<(), AnalyticsError> {
        let mut out = csv::Writer::from_writer(sink);
        out.write_record(["year", "total", "resolved", "percentage", "partial_year"])?;
        for y in &self.years {
            out.write_record([
                y.year.to_string(),
                y.total.to_string(),
                y.resolved.to_string(),
                y.percentage.to_string(),
                u8::from(y.partial_year).to_string(),
            ])?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn write_plot<W: Write>(&self, sink: W) -> Result<(), AnalyticsError> {
        plot(sink, self.years.iter().map(|y| (y.year.to_string(), Some(y.percentage))))
    }
}

/// Acceptance among questions meeting a condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionalReport {
    pub condition: String,
    pub resolved: u64,
    pub unresolved: u64,
    /// `None` when no question meets the condition.
    pub probability: Option<f64>,
}

impl ConditionalReport {
    fn count(condition: String, rows: impl Iterator<Item = bool>) -> Self {
        let (mut resolved, mut unresolved) = (0, 0);
        for r in rows {
            if r {
                resolved += 1;
            } else {
                unresolved += 1;
            }
        }
        ConditionalReport {
            condition,
            resolved,
            unresolved,
            probability: ratio(resolved, resolved + unresolved),
        }
    }

    pub fn total(&self) -> u64 {
        self.resolved + self.unresolved
    }
}

pub fn write_conditionals<W: Write>(sink: W, reports: &[ConditionalReport]) -> Result<(), AnalyticsError> {
    let mut out = csv::Writer::from_writer(sink);
    out.write_record(["condition", "resolved", "unresolved", "probability"])?;
    for r in reports {
        out.write_record([r.condition.clone(), r.resolved.to_string(), r.unresolved.to_string(), opt(r.probability)])?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_conditionals_plot<W: Write>(sink: W, reports: &[ConditionalReport]) -> Result<(), AnalyticsError> {
    plot(sink, reports.iter().map(|r| (r.condition.clone(), r.probability)))
}

fn column(matrix: &FeatureMatrix, name: &str) -> Result<usize, AnalyticsError> {
    matrix
        .names
        .iter()
        .position(|n| n == name)
        .ok_or_else(|| AnalyticsError::MissingColumn(name.to_string()))
}

/// Acceptance among questions whose asker held `badge` when asking.
pub fn badge_conditional(matrix: &FeatureMatrix, badge: &str) -> Result<ConditionalReport, AnalyticsError> {
    let index = badge_index(badge).ok_or_else(|| AnalyticsError::UnknownBadge(badge.to_string()))?;
    let col = column(matrix, USER_FEATURE_NAMES[6 + index])?;
    Ok(ConditionalReport::count(
        format!("{} held", BADGES[index]),
        matrix.rows.iter().filter(|r| r.features[col] != 0.0).map(|r| r.label == 1),
    ))
}

/// For each of the 20 badges, acceptance with and without it.
pub fn badge_report(matrix: &FeatureMatrix) -> Result<Vec<ConditionalReport>, AnalyticsError> {
    let mut out = Vec::with_capacity(2 * BADGES.len());
    for (index, badge) in BADGES.iter().enumerate() {
        out.push(badge_conditional(matrix, badge)?);
        let col = column(matrix, USER_FEATURE_NAMES[6 + index])?;
        out.push(ConditionalReport::count(
            format!("{badge} not held"),
            matrix.rows.iter().filter(|r| r.features[col] == 0.0).map(|r| r.label == 1),
        ));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupRow {
    pub key: u64,
    pub total: u64,
    pub resolved: u64,
    pub probability: f64,
}

/// Acceptance per tag count, groups in ascending order.
pub fn probability_by_tag_count(matrix: &FeatureMatrix) -> Result<Vec<GroupRow>, AnalyticsError> {
    let col = column(matrix, "tag_count")?;
    let mut groups: BTreeMap<u64, (u64, u64)> = BTreeMap::new();
    for row in &matrix.rows {
        let entry = groups.entry(row.features[col] as u64).or_default();
        entry.0 += 1;
        entry.1 += u64::from(row.label);
    }
    Ok(groups
        .into_iter()
        .map(|(key, (total, resolved))| GroupRow {
            key,
            total,
            resolved,
            probability: resolved as f64 / total as f64,
        })
        .collect())
}

pub fn write_groups<W: Write>(sink: W, key: &str, groups: &[GroupRow]) -> Result<(), AnalyticsError> {
    let mut out = csv::Writer::from_writer(sink);
    out.write_record([key, "total", "resolved", "probability"])?;
    for g in groups {
        out.write_record([g.key.to_string(), g.total.to_string(), g.resolved.to_string(), g.probability.to_string()])?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_groups_plot<W: Write>(sink: W, groups: &[GroupRow]) -> Result<(), AnalyticsError> {
    plot(sink, groups.iter().map(|g| (g.key.to_string(), Some(g.probability))))
}

/// Acceptance for bodies of at least `threshold` words, and below it.
pub fn probability_by_body_length(matrix: &FeatureMatrix, threshold: usize) -> Result<[ConditionalReport; 2], AnalyticsError> {
    let col = column(matrix, "body_word_count")?;
    let long = |r: &&crate::dataset::FeatureVector| r.features[col] >= threshold as f64;
    Ok([
        ConditionalReport::count(
            format!("body_words >= {threshold}"),
            matrix.rows.iter().filter(long).map(|r| r.label == 1),
        ),
        ConditionalReport::count(
            format!("body_words < {threshold}"),
            matrix.rows.iter().filter(|r| !long(r)).map(|r| r.label == 1),
        ),
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TagRate {
    pub tag: String,
    pub uses: u64,
    pub resolved: u64,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct TagExtremes {
    /// Highest acceptance first.
    pub top: Vec<TagRate>,
    /// Lowest acceptance first.
    pub bottom: Vec<TagRate>,
}

/// The `k` tags with the highest and the lowest acceptance; ties by name.
pub fn tag_acceptance_extremes(rates: &BTreeMap<String, TagAcceptance>, k: usize) -> TagExtremes {
    let mut all: Vec<TagRate> = rates
        .iter()
        .map(|(tag, a)| TagRate {
            tag: tag.clone(),
            uses: a.uses,
            resolved: a.resolved,
            probability: a.probability,
        })
        .collect();
    all.sort_by(|a, b| b.probability.total_cmp(&a.probability).then_with(|| a.tag.cmp(&b.tag)));
    let top = all.iter().take(k).cloned().collect();
    all.sort_by(|a, b| a.probability.total_cmp(&b.probability).then_with(|| a.tag.cmp(&b.tag)));
    let bottom = all.into_iter().take(k).collect();
    TagExtremes { top, bottom }
}

impl TagExtremes {
    /// `list,rank,tag,uses,resolved,probability`.
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<(), AnalyticsError> {
        let mut out = csv::Writer::from_writer(sink);
        out.write_record(["list", "rank", "tag", "uses", "resolved", "probability"])?;
        for (list, rows) in [("top", &self.top), ("bottom", &self.bottom)] {
            for (i, r) in rows.iter().enumerate() {
                out.write_record([
                    list.to_string(),
                    (i + 1).to_string(),
                    r.tag.clone(),
                    r.uses.to_string(),
                    r.resolved.to_string(),
                    r.probability.to_string(),
                ])?;
            }
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn write_plot<W: Write>(&self, sink: W) -> Result<(), AnalyticsError> {
        plot(sink, self.top.iter().chain(&self.bottom).map(|r| (r.tag.clone(), Some(r.probability))))
    }
}
