//! Per-tag metrics and the question-level tag features.
//!
//! A tag's age is estimated from its insertion-ordered id: `time_index` is
//! `log10(tag_id / period * alpha)` where `period` is the spread of tag ids.
//! From it and the follower and question counts we derive
//!
//! | metric        | value                                   |
//! |---------------|-----------------------------------------|
//! | popularity    | followers / time_index                  |
//! | expert ratio  | followers / count                       |
//! | problem rate  | count / time_index                      |
//! | tag quality   | followers / (time_index * count)        |
//!
//! Expert ratio and tag quality are undefined for tags without questions.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{FollowerTable, TagRow};
use crate::scalar::Scalar;

pub const TAG_FEATURE_NAMES: [&str; 6] = [
    "tag_count",
    "max_tag_quality",
    "avg_tag_quality",
    "max_expert_ratio",
    "min_tag_quality",
    "max_problem_rate",
];

pub const DEFAULT_ALPHA: f64 = 1.0e7;

#[derive(Debug, Error, PartialEq)]
pub enum TagError {
    #[error("tag id {tag_id} outside [{min_id}, {max_id}]")]
    IdOutOfRange { tag_id: u64, min_id: u64, max_id: u64 },
    #[error("tag id range has zero width")]
    EmptyPeriod,
    #[error("time_index for tag id {tag_id} is {value}; alpha {alpha} is too small")]
    NonPositiveTimeIndex { tag_id: u64, alpha: f64, value: f64 },
    #[error("alpha must be positive, got {0}")]
    BadAlpha(f64),
    #[error("no tag rows")]
    NoTags,
    #[error("question has no tags")]
    NoQuestionTags,
    #[error("question has {0} tags; at most 5 allowed")]
    TooManyTags(usize),
    #[error("unknown metric {0:?}")]
    UnknownMetric(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeIndexConfig<T> {
    pub alpha: T,
    pub min_id: u64,
    pub max_id: u64,
}

impl<T: Scalar> TimeIndexConfig<T> {
    pub fn new(alpha: T, min_id: u64, max_id: u64) -> Result<Self, TagError> {
        if !(alpha > T::zero()) || !alpha.is_finite() {
            return Err(TagError::BadAlpha(alpha.as_f64()));
        }
        if max_id <= min_id {
            return Err(TagError::EmptyPeriod);
        }
        Ok(TimeIndexConfig { alpha, min_id, max_id })
    }

    /// Config spanning the id range of `rows`.
    pub fn from_rows(alpha: T, rows: &[TagRow]) -> Result<Self, TagError> {
        let min_id = rows.iter().map(|r| r.id).min().ok_or(TagError::NoTags)?;
        let max_id = rows.iter().map(|r| r.id).max().ok_or(TagError::NoTags)?;
        Self::new(alpha, min_id, max_id)
    }

    pub fn period(&self) -> u64 {
        self.max_id - self.min_id
    }
}

pub fn time_index<T: Scalar>(tag_id: u64, config: &TimeIndexConfig<T>) -> Result<T, TagError> {
    if tag_id < config.min_id || tag_id > config.max_id {
        return Err(TagError::IdOutOfRange {
            tag_id,
            min_id: config.min_id,
            max_id: config.max_id,
        });
    }
    let period = config.period();
    if period == 0 {
        return Err(TagError::EmptyPeriod);
    }
    let value = (T::of(tag_id as f64) / T::of(period as f64) * config.alpha).log10();
    if !(value > T::zero()) || !value.is_finite() {
        return Err(TagError::NonPositiveTimeIndex {
            tag_id,
            alpha: config.alpha.as_f64(),
            value: value.as_f64(),
        });
    }
    Ok(value)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagStats<T> {
    pub tag_id: u64,
    pub name: String,
    pub count: u64,
    pub followers: u64,
    /// False when the follower file had no entry; followers is then 0.
    pub followers_known: bool,
    pub time_index: T,
    pub popularity: T,
    /// `None` when the tag has no questions.
    pub expert_ratio: Option<T>,
    pub problem_rate: T,
    /// `None` when the tag has no questions.
    pub tag_quality: Option<T>,
}

impl<T: Scalar> TagStats<T> {
    pub fn new(
        tag_id: u64,
        name: impl Into<String>,
        count: u64,
        followers: Option<u64>,
        time_index: T,
    ) -> Self {
        let followers_known = followers.is_some();
        let followers = followers.unwrap_or(0);
        let f = T::of(followers as f64);
        let c = T::of(count as f64);
        let (expert_ratio, tag_quality) = if count == 0 {
            (None, None)
        } else {
            (Some(f / c), Some(f / (time_index * c)))
        };
        TagStats {
            tag_id,
            name: name.into(),
            count,
            followers,
            followers_known,
            time_index,
            popularity: f / time_index,
            expert_ratio,
            problem_rate: c / time_index,
            tag_quality,
        }
    }

    pub fn metric(&self, metric: TagMetric) -> Option<T> {
        match metric {
            TagMetric::Popularity => Some(self.popularity),
            TagMetric::ExpertRatio => self.expert_ratio,
            TagMetric::ProblemRate => Some(self.problem_rate),
            TagMetric::TagQuality => self.tag_quality,
        }
    }
}

pub type TagStatsMap<T> = BTreeMap<String, TagStats<T>>;

/// Builds the stats of every tag. Tags missing from the follower table get
/// zero followers and `followers_known = false`.
pub fn compute_tag_stats<T: Scalar>(
    rows: &[TagRow],
    followers: &FollowerTable,
    config: &TimeIndexConfig<T>,
) -> Result<TagStatsMap<T>, TagError> {
    if rows.is_empty() {
        return Err(TagError::NoTags);
    }
    let mut stats = BTreeMap::new();
    for row in rows {
        let ti = time_index(row.id, config)?;
        let entry = TagStats::new(row.id, row.name.clone(), row.count, followers.get(&row.name), ti);
        stats.insert(row.name.clone(), entry);
    }
    let unmatched = followers
        .followers
        .keys()
        .filter(|name| !stats.contains_key(*name))
        .count();
    if unmatched > 0 {
        log::warn!("{unmatched} follower entries name tags absent from the tag table");
    }
    Ok(stats)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuestionTagFeatures<T> {
    pub tag_count: usize,
    pub max_tag_quality: T,
    pub avg_tag_quality: T,
    pub max_expert_ratio: T,
    pub min_tag_quality: T,
    pub max_problem_rate: T,
    /// Tags that were unknown or had undefined ratios and contributed zero.
    pub zero_filled: usize,
}

impl<T: Scalar> QuestionTagFeatures<T> {
    pub fn values(&self) -> [T; 6] {
        [
            T::of_usize(self.tag_count),
            self.max_tag_quality,
            self.avg_tag_quality,
            self.max_expert_ratio,
            self.min_tag_quality,
            self.max_problem_rate,
        ]
    }
}

/// Aggregates the stats of a question's tags. Unknown tags, and ratios that
/// are undefined, contribute zero but still count toward `tag_count`.
pub fn question_tag_features<T: Scalar, S: AsRef<str>>(
    tag_names: &[S],
    stats: &TagStatsMap<T>,
) -> Result<QuestionTagFeatures<T>, TagError> {
    if tag_names.is_empty() {
        return Err(TagError::NoQuestionTags);
    }
    if tag_names.len() > 5 {
        return Err(TagError::TooManyTags(tag_names.len()));
    }
    let mut qualities = Vec::with_capacity(tag_names.len());
    let mut max_expert = T::zero();
    let mut max_problem = T::zero();
    let mut zero_filled = 0;
    for name in tag_names {
        let found = stats.get(&name.as_ref().to_lowercase());
        let quality = found.and_then(|s| s.tag_quality);
        if quality.is_none() {
            zero_filled += 1;
        }
        qualities.push(quality.unwrap_or_else(T::zero));
        if let Some(s) = found {
            max_expert = max_expert.max(s.expert_ratio.unwrap_or_else(T::zero));
            max_problem = max_problem.max(s.problem_rate);
        }
    }
    let sum: T = qualities.iter().copied().sum();
    Ok(QuestionTagFeatures {
        tag_count: tag_names.len(),
        max_tag_quality: qualities.iter().copied().fold(T::neg_infinity(), T::max),
        avg_tag_quality: sum / T::of_usize(qualities.len()),
        max_expert_ratio: max_expert,
        min_tag_quality: qualities.iter().copied().fold(T::infinity(), T::min),
        max_problem_rate: max_problem,
        zero_filled,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TagMetric {
    Popularity,
    ExpertRatio,
    ProblemRate,
    TagQuality,
}

impl TagMetric {
    pub const ALL: [TagMetric; 4] = [
        TagMetric::Popularity,
        TagMetric::ExpertRatio,
        TagMetric::ProblemRate,
        TagMetric::TagQuality,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TagMetric::Popularity => "popularity",
            TagMetric::ExpertRatio => "expert_ratio",
            TagMetric::ProblemRate => "problem_rate",
            TagMetric::TagQuality => "tag_quality",
        }
    }
}

impl fmt::Display for TagMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TagMetric {
    type Err = TagError;

    fn from_str(s: &str) -> Result<Self, TagError> {
        TagMetric::ALL
            .into_iter()
            .find(|m| m.as_str() == s.replace('-', "_"))
            .ok_or_else(|| TagError::UnknownMetric(s.to_string()))
    }
}

/// Tags with `count >= min_count`, best first; ties by ascending name. Tags
/// whose metric is undefined are left out.
pub fn rank_tags<T: Scalar>(
    stats: &TagStatsMap<T>,
    metric: TagMetric,
    min_count: u64,
) -> Vec<(String, T)> {
    let mut ranked: Vec<(String, T)> = stats
        .values()
        .filter(|s| s.count >= min_count)
        .filter_map(|s| s.metric(metric).map(|v| (s.name.clone(), v)))
        .collect();
    ranked.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.cmp(&b.0))
    });
    ranked
}

/// Writes a ranking as `rank,tag,metric,value`.
pub fn write_ranking<T: Scalar, W: Write>(
    out: W,
    metric: TagMetric,
    ranking: &[(String, T)],
) -> csv::Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["rank", "tag", "metric", "value"])?;
    for (i, (name, value)) in ranking.iter().enumerate() {
        writer.write_record([
            (i + 1).to_string(),
            name.clone(),
            metric.to_string(),
            value.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Share of resolved questions per tag, for tags used at least `min_uses`
/// times. Each item is a question's tags and its resolved label.
pub fn per_tag_acceptance<'a, I, S>(questions: I, min_uses: u64) -> BTreeMap<String, TagAcceptance>
where
    I: IntoIterator<Item = (&'a [S], bool)>,
    S: AsRef<str> + 'a,
{
    let mut counts: HashMap<String, (u64, u64)> = HashMap::new();
    for (tags, resolved) in questions {
        for tag in tags {
            let entry = counts.entry(tag.as_ref().to_string()).or_default();
            entry.0 += 1;
            entry.1 += u64::from(resolved);
        }
    }
    counts
        .into_iter()
        .filter(|(_, (uses, _))| *uses >= min_uses.max(1))
        .map(|(name, (uses, resolved))| {
            (
                name,
                TagAcceptance {
                    uses,
                    resolved,
                    probability: resolved as f64 / uses as f64,
                },
            )
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TagAcceptance {
    pub uses: u64,
    pub resolved: u64,
    pub probability: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn config(alpha: f64, min_id: u64, max_id: u64) -> TimeIndexConfig<f64> {
        TimeIndexConfig::new(alpha, min_id, max_id).unwrap()
    }

    #[test]
    fn worked_time_index() {
        let ti = time_index(133_634, &config(1e7, 1, 139_961)).unwrap();
        assert!((ti - 6.98).abs() <= 0.005, "{ti}");
    }

    #[test]
    fn time_index_at_period_is_log_alpha() {
        let ti = time_index(100, &config(1e7, 0, 100)).unwrap();
        assert!((ti - 7.0).abs() < 1e-12);
    }

    #[test]
    fn non_positive_time_index_is_config_error() {
        let cfg = config(10.0, 0, 10);
        assert!(matches!(
            time_index(1, &cfg),
            Err(TagError::NonPositiveTimeIndex { .. })
        ));
        assert!(matches!(time_index(11, &cfg), Err(TagError::IdOutOfRange { .. })));
        assert!(TimeIndexConfig::new(1e7, 5, 5).is_err());
        assert!(TimeIndexConfig::new(0.0, 1, 5).is_err());
    }

    #[test]
    fn metric_formulas() {
        let s = TagStats::<f64>::new(1, "x", 100, Some(700), 7.0);
        assert_eq!(s.popularity, 100.0);
        assert_eq!(s.expert_ratio, Some(7.0));
        assert!((s.problem_rate - 100.0 / 7.0).abs() < 1e-12);
        assert_eq!(s.tag_quality, Some(1.0));

        let s = TagStats::new(1, "x", 100, Some(0), 7.0);
        assert_eq!((s.popularity, s.expert_ratio, s.tag_quality), (0.0, Some(0.0), Some(0.0)));

        let s = TagStats::new(1, "x", 0, Some(10), 7.0);
        assert_eq!(s.expert_ratio, None);
        assert_eq!(s.tag_quality, None);
        assert_eq!(s.problem_rate, 0.0);
    }

    #[test]
    fn works_in_single_precision() {
        let cfg = TimeIndexConfig::<f32>::new(1e7, 1, 139_961).unwrap();
        let ti = time_index(133_634, &cfg).unwrap();
        assert!((ti - 6.98).abs() <= 0.005);
        let s = TagStats::<f32>::new(1, "x", 100, Some(700), 7.0);
        assert_eq!(s.tag_quality, Some(1.0));
    }

    fn stats_with(qualities: &[(&str, u64, u64, f64)]) -> TagStatsMap<f64> {
        qualities
            .iter()
            .enumerate()
            .map(|(i, &(name, count, followers, ti))| {
                (name.to_string(), TagStats::new(i as u64 + 1, name, count, Some(followers), ti))
            })
            .collect()
    }

    #[test]
    fn question_aggregates() {
        // tag_quality = followers / (ti * count): a -> 1.0, b -> 3.0
        let stats = stats_with(&[("a", 10, 10, 1.0), ("b", 10, 30, 1.0)]);
        let f = question_tag_features(&["a"], &stats).unwrap();
        assert_eq!((f.min_tag_quality, f.avg_tag_quality, f.max_tag_quality), (1.0, 1.0, 1.0));

        let f = question_tag_features(&["a", "b"], &stats).unwrap();
        assert_eq!((f.min_tag_quality, f.avg_tag_quality, f.max_tag_quality), (1.0, 2.0, 3.0));
        assert_eq!(f.max_expert_ratio, 3.0);
        assert_eq!(f.max_problem_rate, 10.0);
        assert_eq!(f.tag_count, 2);

        let stats = stats_with(&[("known", 10, 20, 1.0)]);
        let f = question_tag_features(&["known", "brand-new"], &stats).unwrap();
        assert_eq!((f.min_tag_quality, f.avg_tag_quality, f.max_tag_quality), (0.0, 1.0, 2.0));
        assert_eq!(f.tag_count, 2);
        assert_eq!(f.zero_filled, 1);

        let empty: [&str; 0] = [];
        assert_eq!(question_tag_features(&empty, &stats), Err(TagError::NoQuestionTags));
        assert!(question_tag_features(&["a", "b", "c", "d", "e", "f"], &stats).is_err());
    }

    #[test]
    fn ranking_order_and_filter() {
        let stats = stats_with(&[
            ("css3", 60_000, 90_000, 1.0),
            ("java", 70_000, 70_000, 1.0),
            ("html", 80_000, 40_000, 1.0),
            ("tiny", 10, 1_000, 1.0),
        ]);
        let ranked = rank_tags(&stats, TagMetric::TagQuality, 50_000);
        let names: Vec<&str> = ranked.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, vec!["css3", "java", "html"]);
        assert!(rank_tags(&stats, TagMetric::TagQuality, 1_000_000).is_empty());

        let tied = stats_with(&[("zeta", 10, 10, 1.0), ("alpha", 10, 10, 1.0)]);
        let ranked = rank_tags(&tied, TagMetric::Popularity, 0);
        assert_eq!(ranked[0].0, "alpha");
        assert_eq!(ranked[1].0, "zeta");
    }

    #[test]
    fn ranking_csv() {
        let ranked = vec![("a".to_string(), 2.5_f64), ("b".to_string(), 1.0)];
        let mut out = Vec::new();
        write_ranking(&mut out, TagMetric::ProblemRate, &ranked).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "rank,tag,metric,value\n1,a,problem_rate,2.5\n2,b,problem_rate,1\n"
        );
    }

    #[test]
    fn metric_names_parse() {
        assert_eq!("tag_quality".parse::<TagMetric>().unwrap(), TagMetric::TagQuality);
        assert_eq!("expert-ratio".parse::<TagMetric>().unwrap(), TagMetric::ExpertRatio);
        assert!("views".parse::<TagMetric>().is_err());
    }

    #[test]
    fn acceptance_per_tag() {
        let x = vec!["x".to_string()];
        let xy = vec!["x".to_string(), "y".to_string()];
        let qs = vec![(x.as_slice(), true), (x.as_slice(), true), (xy.as_slice(), true), (x.as_slice(), false)];
        let probs = per_tag_acceptance(qs.iter().copied(), 1);
        assert_eq!(probs["x"].probability, 0.75);
        assert_eq!(probs["y"].probability, 1.0);
        let probs = per_tag_acceptance(qs.iter().copied(), 2);
        assert!(!probs.contains_key("y"));
    }

    proptest! {
        #[test]
        fn cross_identities(followers in 0u64..5_000_000, count in 1u64..3_000_000, id in 1u64..=150_000) {
            let cfg = config(DEFAULT_ALPHA, 0, 150_000);
            let ti = time_index(id, &cfg).unwrap();
            let s = TagStats::new(id, "t", count, Some(followers), ti);
            let q = s.tag_quality.unwrap();
            let rel = |a: f64, b: f64| if a == b { 0.0 } else { (a - b).abs() / a.abs().max(b.abs()) };
            prop_assert!(rel(q, s.popularity / count as f64) <= 1e-9);
            prop_assert!(rel(q, s.expert_ratio.unwrap() / ti) <= 1e-9);
        }

        #[test]
        fn time_index_monotone_and_log_law(a in 1u64..100_000, b in 1u64..100_000) {
            let cfg = config(DEFAULT_ALPHA, 0, 100_000);
            let big = config(DEFAULT_ALPHA * 10.0, 0, 100_000);
            let (ta, tb) = (time_index(a, &cfg).unwrap(), time_index(b, &cfg).unwrap());
            if a < b { prop_assert!(ta < tb); }
            prop_assert!((time_index(a, &big).unwrap() - ta - 1.0).abs() < 1e-12);
        }

        #[test]
        fn ranking_is_sorted_permutation(entries in prop::collection::vec((0u64..100, 0u64..1000), 0..30), min in 0u64..100) {
            let stats: TagStatsMap<f64> = entries.iter().enumerate().map(|(i, &(count, followers))| {
                let name = format!("t{i}");
                (name.clone(), TagStats::new(i as u64 + 1, name, count, Some(followers), 3.0))
            }).collect();
            let ranked = rank_tags(&stats, TagMetric::Popularity, min);
            let expected = stats.values().filter(|s| s.count >= min).count();
            prop_assert_eq!(ranked.len(), expected);
            for pair in ranked.windows(2) {
                prop_assert!(pair[0].1 > pair[1].1 || (pair[0].1 == pair[1].1 && pair[0].0 < pair[1].0));
            }
        }

        #[test]
        fn acceptance_in_bounds_and_recombines(labels in prop::collection::vec((0usize..4, any::<bool>()), 1..80)) {
            let names = ["a", "b", "c", "d"];
            let tags: Vec<Vec<String>> = labels.iter().map(|(t, _)| vec![names[*t].to_string()]).collect();
            let qs: Vec<(&[String], bool)> = tags.iter().zip(&labels).map(|(t, (_, r))| (t.as_slice(), *r)).collect();
            let probs = per_tag_acceptance(qs.iter().copied(), 1);
            let total: u64 = probs.values().map(|p| p.uses).sum();
            let weighted: f64 = probs.values().map(|p| p.uses as f64 * p.probability).sum::<f64>() / total as f64;
            let overall = labels.iter().filter(|(_, r)| *r).count() as f64 / labels.len() as f64;
            prop_assert!((weighted - overall).abs() < 1e-12);
            for p in probs.values() {
                prop_assert!((0.0..=1.0).contains(&p.probability));
            }
        }
    }
}
