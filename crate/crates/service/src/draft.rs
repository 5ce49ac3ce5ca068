//! Question drafts: validation and feature assembly.

use std::collections::BTreeMap;

use accepted::content::extract_content_features;
use accepted::dataset::{assemble_features, MetadataFeatures, FEATURE_NAMES};
use accepted::history::AskerSnapshot;
use accepted::ingest::parse_dump_timestamp;
use accepted::tag_metrics::{question_tag_features, TagStatsMap};
use chrono::{DateTime, Utc};
use serde::Serialize;
use serde_json::{Map, Value};

pub const MAX_TAGS: usize = 5;

/// A validated draft.
#[derive(Debug, Clone, PartialEq)]
pub struct QuestionDraft {
    pub title: String,
    pub body_html: String,
    pub tags: Vec<String>,
    pub asked_at: Option<DateTime<Utc>>,
    pub asker: AskerSnapshot,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

fn field_error(field: impl Into<String>, message: impl Into<String>) -> FieldError {
    FieldError {
        field: field.into(),
        message: message.into(),
    }
}

/// Accepts RFC 3339 (any offset, converted to UTC) or the dump's
/// zone-less `YYYY-MM-DDTHH:MM:SS[.fff]` form read as UTC.
pub fn parse_timestamp(raw: &str) -> Option<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(raw)
        .map(|t| t.with_timezone(&Utc))
        .ok()
        .or_else(|| parse_dump_timestamp(raw).ok())
}

impl QuestionDraft {
    /// Validates a JSON draft, reporting every offending field.
    pub fn from_json(value: &Value) -> Result<Self, Vec<FieldError>> {
        let Some(object) = value.as_object() else {
            return Err(vec![field_error("body", "expected a JSON object")]);
        };
        let mut errors = Vec::new();
        for key in object.keys() {
            if !matches!(key.as_str(), "title" | "body_html" | "tags" | "asked_at" | "asker") {
                errors.push(field_error(key.as_str(), "unknown field"));
            }
        }

        let title = match object.get("title") {
            Some(Value::String(s)) if !s.trim().is_empty() => s.clone(),
            Some(Value::String(_)) => {
                errors.push(field_error("title", "must not be empty"));
                String::new()
            }
            Some(_) => {
                errors.push(field_error("title", "must be a string"));
                String::new()
            }
            None => {
                errors.push(field_error("title", "is required"));
                String::new()
            }
        };

        let body_html = match object.get("body_html") {
            Some(Value::String(s)) => s.clone(),
            Some(_) => {
                errors.push(field_error("body_html", "must be a string"));
                String::new()
            }
            None => {
                errors.push(field_error("body_html", "is required"));
                String::new()
            }
        };

        let mut tags = Vec::new();
        match object.get("tags") {
            Some(Value::Array(items)) => {
                for (i, item) in items.iter().enumerate() {
                    match item.as_str().map(str::trim) {
                        Some(tag) if !tag.is_empty() && !tag.contains(['<', '>']) && !tag.contains(char::is_whitespace) => {
                            tags.push(tag.to_lowercase())
                        }
                        _ => errors.push(field_error(format!("tags[{i}]"), "must be a non-empty tag name")),
                    }
                }
                if items.is_empty() || items.len() > MAX_TAGS {
                    errors.push(field_error("tags", format!("must have 1 to {MAX_TAGS} tags, got {}", items.len())));
                }
            }
            Some(_) => errors.push(field_error("tags", "must be an array of tag names")),
            None => errors.push(field_error("tags", "is required")),
        }

        let asked_at = match object.get("asked_at") {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => {
                let parsed = parse_timestamp(s);
                if parsed.is_none() {
                    errors.push(field_error("asked_at", format!("not a timestamp: {s:?}")));
                }
                parsed
            }
            Some(_) => {
                errors.push(field_error("asked_at", "must be a timestamp string"));
                None
            }
        };

        let asker = match object.get("asker") {
            None | Some(Value::Null) => AskerSnapshot::default(),
            Some(Value::Object(fields)) => parse_asker(fields, &mut errors),
            Some(_) => {
                errors.push(field_error("asker", "must be an object"));
                AskerSnapshot::default()
            }
        };

        if errors.is_empty() {
            Ok(QuestionDraft { title, body_html, tags, asked_at, asker })
        } else {
            Err(errors)
        }
    }

    /// The 52 features, assembled exactly as the matrix builder does.
    pub fn features(&self, tag_stats: &TagStatsMap<f64>, now: DateTime<Utc>) -> Vec<f64> {
        let content = extract_content_features(&self.title, &self.body_html);
        let tags = question_tag_features(&self.tags, tag_stats).expect("tag count validated");
        let metadata = MetadataFeatures::at(self.asked_at.unwrap_or(now));
        assemble_features(&content, &tags, &metadata, &self.asker)
    }
}

fn parse_asker(fields: &Map<String, Value>, errors: &mut Vec<FieldError>) -> AskerSnapshot {
    // Check each field on its own so every bad one is named.
    let template = serde_json::to_value(AskerSnapshot::default()).expect("snapshot serializes");
    let known = template.as_object().expect("snapshot is an object");
    let mut clean = Map::new();
    for (key, value) in fields {
        let path = format!("asker.{key}");
        let Some(example) = known.get(key) else {
            errors.push(field_error(path, "unknown field"));
            continue;
        };
        let ok = match example {
            Value::Bool(_) => value.is_boolean(),
            Value::Number(n) if n.is_f64() => value.as_f64().is_some_and(|v| v.is_finite() && v >= 0.0),
            Value::Number(_) if key.ends_with("score_sum") => value.is_i64(),
            Value::Number(_) => value.is_u64(),
            _ => false,
        };
        if ok {
            clean.insert(key.clone(), value.clone());
        } else {
            let expected = match example {
                Value::Bool(_) => "a boolean",
                Value::Number(n) if n.is_f64() => "a non-negative number",
                _ if key.ends_with("score_sum") => "an integer",
                _ => "a non-negative integer",
            };
            errors.push(field_error(path, format!("must be {expected}")));
        }
    }
    serde_json::from_value(Value::Object(clean)).unwrap_or_default()
}

/// Feature names mapped to values.
pub fn feature_map(features: &[f64]) -> BTreeMap<String, f64> {
    FEATURE_NAMES.iter().map(|n| n.to_string()).zip(features.iter().copied()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn fields(result: Result<QuestionDraft, Vec<FieldError>>) -> Vec<String> {
        result.unwrap_err().into_iter().map(|e| e.field).collect()
    }

    #[test]
    fn minimal_draft() {
        let d = QuestionDraft::from_json(&json!({"title": "Hi", "body_html": "", "tags": ["Rust"]})).unwrap();
        assert_eq!(d.tags, vec!["rust"]);
        assert_eq!(d.asker, AskerSnapshot::default());
        assert!(d.asked_at.is_none());
    }

    #[test]
    fn every_bad_field_is_named() {
        let v = json!({"title": " ", "body_html": 3, "tags": [], "asked_at": "yesterday", "color": "red"});
        let mut got = fields(QuestionDraft::from_json(&v));
        got.sort();
        assert_eq!(got, ["asked_at", "body_html", "color", "tags", "title"]);
        let six = json!({"title": "t", "body_html": "", "tags": ["a", "b", "c", "d", "e", "f"]});
        assert_eq!(fields(QuestionDraft::from_json(&six)), ["tags"]);
        let bad_tag = json!({"title": "t", "body_html": "", "tags": ["ok", 4, "<x>"]});
        assert_eq!(fields(QuestionDraft::from_json(&bad_tag)), ["tags[1]", "tags[2]"]);
        assert_eq!(fields(QuestionDraft::from_json(&json!([1]))), ["body"]);
    }

    #[test]
    fn asker_fields_are_typed() {
        let v = json!({"title": "t", "body_html": "", "tags": ["a"], "asker": {
            "prior_answers": 3, "prior_answers_score_sum": -2, "membership_duration_days": 1.5,
            "scholar": true, "prior_questions": -1, "informed": 1, "karma": 9
        }});
        let mut got = fields(QuestionDraft::from_json(&v));
        got.sort();
        assert_eq!(got, ["asker.informed", "asker.karma", "asker.prior_questions"]);

        let v = json!({"title": "t", "body_html": "", "tags": ["a"], "asker": {
            "prior_answers": 3, "prior_answers_score_sum": -2, "membership_duration_days": 1.5, "scholar": true
        }});
        let d = QuestionDraft::from_json(&v).unwrap();
        assert_eq!(d.asker.prior_answers, 3);
        assert_eq!(d.asker.prior_answers_score_sum, -2);
        assert!(d.asker.badges()[0]);
    }

    #[test]
    fn timestamps() {
        let want = parse_dump_timestamp("2012-03-04T05:06:07").unwrap();
        assert_eq!(parse_timestamp("2012-03-04T05:06:07Z"), Some(want));
        assert_eq!(parse_timestamp("2012-03-04T07:06:07+02:00"), Some(want));
        assert_eq!(parse_timestamp("2012-03-04T05:06:07.000"), Some(want));
        assert_eq!(parse_timestamp("March 4"), None);
    }
}
