use std::io::BufRead;
use std::marker::PhantomData;

use chrono::{DateTime, Utc};
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use serde::{Deserialize, Serialize};

use super::timestamp::{format_dump_timestamp, parse_dump_timestamp};
use super::IngestError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PostType {
    Question,
    Answer,
    /// Wiki excerpts, moderator nominations and the like. Kept but unused.
    Other(u32),
}

impl PostType {
    pub fn from_code(code: u32) -> Self {
        match code {
            1 => PostType::Question,
            2 => PostType::Answer,
            other => PostType::Other(other),
        }
    }

    pub fn code(self) -> u32 {
        match self {
            PostType::Question => 1,
            PostType::Answer => 2,
            PostType::Other(code) => code,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostRow {
    pub id: u64,
    pub post_type: PostType,
    pub accepted_answer_id: Option<u64>,
    pub parent_id: Option<u64>,
    pub creation_date: DateTime<Utc>,
    pub score: i64,
    pub title: Option<String>,
    pub body_html: String,
    pub tags_raw: Option<String>,
    pub owner_user_id: Option<i64>,
}

impl PostRow {
    pub fn is_question(&self) -> bool {
        self.post_type == PostType::Question
    }

    /// Serializes the record back into a dump `<row .../>` element.
    pub fn to_dump_row(&self) -> String {
        let mut out = String::from("<row");
        push_attr(&mut out, "Id", &self.id.to_string());
        push_attr(&mut out, "PostTypeId", &self.post_type.code().to_string());
        if let Some(id) = self.accepted_answer_id {
            push_attr(&mut out, "AcceptedAnswerId", &id.to_string());
        }
        if let Some(id) = self.parent_id {
            push_attr(&mut out, "ParentId", &id.to_string());
        }
        push_attr(&mut out, "CreationDate", &format_dump_timestamp(&self.creation_date));
        push_attr(&mut out, "Score", &self.score.to_string());
        push_attr(&mut out, "Body", &self.body_html);
        if let Some(id) = self.owner_user_id {
            push_attr(&mut out, "OwnerUserId", &id.to_string());
        }
        if let Some(title) = &self.title {
            push_attr(&mut out, "Title", title);
        }
        if let Some(tags) = &self.tags_raw {
            push_attr(&mut out, "Tags", tags);
        }
        out.push_str(" />");
        out
    }
}

fn push_attr(out: &mut String, key: &str, value: &str) {
    out.push(' ');
    out.push_str(key);
    out.push_str("=\"");
    for c in value.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\n' => out.push_str("&#xA;"),
            '\r' => out.push_str("&#xD;"),
            '\t' => out.push_str("&#x9;"),
            c => out.push(c),
        }
    }
    out.push('"');
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagRow {
    pub id: u64,
    pub name: String,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BadgeAward {
    pub user_id: i64,
    pub badge_name: String,
    pub awarded_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserRow {
    pub id: i64,
    pub created_at: DateTime<Utc>,
}

/// Decoded attributes of one `<row>` element.
#[derive(Debug, Default)]
pub struct RowAttrs {
    pairs: Vec<(String, String)>,
}

impl RowAttrs {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.pairs
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    fn required(&self, key: &str) -> Result<&str, String> {
        self.get(key).ok_or_else(|| format!("missing attribute {key}"))
    }

    fn required_int<N: std::str::FromStr>(&self, key: &str) -> Result<N, String> {
        let raw = self.required(key)?;
        raw.trim()
            .parse()
            .map_err(|_| format!("attribute {key}={raw:?} is not an integer"))
    }

    fn optional_int<N: std::str::FromStr>(&self, key: &str) -> Result<Option<N>, String> {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .trim()
                .parse()
                .map(Some)
                .map_err(|_| format!("attribute {key}={raw:?} is not an integer")),
        }
    }

    fn required_time(&self, key: &str) -> Result<DateTime<Utc>, String> {
        parse_dump_timestamp(self.required(key)?).map_err(|e| e.to_string())
    }
}

/// A record type decodable from a dump row.
pub trait FromRow: Sized {
    fn from_row(attrs: &RowAttrs) -> Result<Self, String>;
}

impl FromRow for PostRow {
    fn from_row(attrs: &RowAttrs) -> Result<Self, String> {
        let id: u64 = attrs.required_int("Id")?;
        if id == 0 {
            return Err("Id must be positive".into());
        }
        let post_type = PostType::from_code(attrs.required_int("PostTypeId")?);
        let creation_date = attrs.required_time("CreationDate")?;
        Ok(PostRow {
            id,
            post_type,
            accepted_answer_id: attrs.optional_int("AcceptedAnswerId")?,
            parent_id: attrs.optional_int("ParentId")?,
            creation_date,
            score: attrs.optional_int("Score")?.unwrap_or(0),
            title: attrs.get("Title").map(str::to_owned),
            body_html: attrs.get("Body").unwrap_or_default().to_owned(),
            tags_raw: attrs.get("Tags").map(str::to_owned),
            owner_user_id: attrs.optional_int("OwnerUserId")?,
        })
    }
}

impl FromRow for TagRow {
    fn from_row(attrs: &RowAttrs) -> Result<Self, String> {
        Ok(TagRow {
            id: attrs.required_int("Id")?,
            name: attrs.required("TagName")?.to_lowercase(),
            count: attrs.optional_int("Count")?.unwrap_or(0),
        })
    }
}

impl FromRow for BadgeAward {
    fn from_row(attrs: &RowAttrs) -> Result<Self, String> {
        Ok(BadgeAward {
            user_id: attrs.required_int("UserId")?,
            badge_name: attrs.required("Name")?.to_owned(),
            awarded_at: attrs.required_time("Date")?,
        })
    }
}

impl FromRow for UserRow {
    fn from_row(attrs: &RowAttrs) -> Result<Self, String> {
        Ok(UserRow {
            id: attrs.required_int("Id")?,
            created_at: attrs.required_time("CreationDate")?,
        })
    }
}

/// Pull iterator over the rows of one dump file.
///
/// Rows that fail to decode are skipped and counted; malformed XML ends the
/// stream with an [`IngestError::Xml`] carrying the byte offset.
pub struct RowStream<R: BufRead, T> {
    reader: Reader<R>,
    buf: Vec<u8>,
    rows_seen: u64,
    skipped: u64,
    depth: usize,
    finished: bool,
    _record: PhantomData<fn() -> T>,
}

impl<R: BufRead, T: FromRow> RowStream<R, T> {
    pub fn new(source: R) -> Self {
        let mut reader = Reader::from_reader(source);
        reader.config_mut().trim_text(true);
        RowStream {
            reader,
            buf: Vec::with_capacity(4096),
            rows_seen: 0,
            skipped: 0,
            depth: 0,
            finished: false,
            _record: PhantomData,
        }
    }

    /// Rows dropped because of a row-level error so far.
    pub fn skipped(&self) -> u64 {
        self.skipped
    }

    pub fn rows_seen(&self) -> u64 {
        self.rows_seen
    }

    /// Outer error: malformed markup. Inner error: undecodable row.
    fn decode(start: &BytesStart<'_>) -> Result<Result<RowAttrs, String>, String> {
        let mut attrs = RowAttrs::default();
        for attr in start.attributes() {
            let attr = match attr {
                Ok(attr) => attr,
                Err(e) => return Err(e.to_string()),
            };
            let key = match std::str::from_utf8(attr.key.as_ref()) {
                Ok(key) => key.to_owned(),
                Err(e) => return Ok(Err(e.to_string())),
            };
            match attr.unescape_value() {
                Ok(value) => attrs.pairs.push((key, value.into_owned())),
                Err(e) => return Ok(Err(format!("attribute {key}: {e}"))),
            }
        }
        Ok(Ok(attrs))
    }

    fn xml_error(&mut self, message: String) -> IngestError {
        self.finished = true;
        let offset = match self.reader.error_position() {
            0 => self.reader.buffer_position(),
            at => at,
        };
        IngestError::Xml { offset, message }
    }
}

impl<R: BufRead, T: FromRow> Iterator for RowStream<R, T> {
    type Item = Result<T, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.finished {
            self.buf.clear();
            let event = match self.reader.read_event_into(&mut self.buf) {
                Ok(event) => event,
                Err(e) => return Some(Err(self.xml_error(e.to_string()))),
            };
            let decoded = match event {
                Event::Eof if self.depth > 0 => {
                    let message = format!("document ended with {} open element(s)", self.depth);
                    return Some(Err(self.xml_error(message)));
                }
                Event::Eof => {
                    self.finished = true;
                    return None;
                }
                Event::Start(ref start) => {
                    self.depth += 1;
                    if start.name().as_ref() != b"row" {
                        continue;
                    }
                    Self::decode(start)
                }
                Event::End(_) => {
                    self.depth = self.depth.saturating_sub(1);
                    continue;
                }
                Event::Empty(ref start) if start.name().as_ref() == b"row" => Self::decode(start),
                _ => continue,
            };
            let row = match decoded {
                Ok(row) => row,
                Err(message) => return Some(Err(self.xml_error(message))),
            };
            self.rows_seen += 1;
            match row.and_then(|attrs| T::from_row(&attrs)) {
                Ok(record) => return Some(Ok(record)),
                Err(message) => {
                    self.skipped += 1;
                    log::warn!("skipping row {}: {}", self.rows_seen, message);
                }
            }
        }
        None
    }
}

pub fn parse_posts<R: BufRead>(source: R) -> RowStream<R, PostRow> {
    RowStream::new(source)
}

pub fn parse_tags<R: BufRead>(source: R) -> RowStream<R, TagRow> {
    RowStream::new(source)
}

pub fn parse_badges<R: BufRead>(source: R) -> RowStream<R, BadgeAward> {
    RowStream::new(source)
}

pub fn parse_users<R: BufRead>(source: R) -> RowStream<R, UserRow> {
    RowStream::new(source)
}
