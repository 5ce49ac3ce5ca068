//! Streaming readers for the Stack Exchange data dump.
//!
//! Every dump file is a single document element holding one `<row .../>`
//! element per record. The readers here pull one row at a time through
//! `quick_xml`, so memory stays proportional to the largest row rather than
//! the file.

mod followers;
mod rows;
mod tags;
mod timestamp;

pub use followers::{load_followers, FollowerTable};
pub use rows::{
    parse_badges, parse_posts, parse_tags, parse_users, BadgeAward, FromRow, PostRow, PostType,
    RowAttrs, RowStream, TagRow, UserRow,
};
pub use tags::{join_tags, split_tags};
pub use timestamp::{format_dump_timestamp, parse_dump_timestamp};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed XML at byte {offset}: {message}")]
    Xml { offset: u64, message: String },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("row {row}: {message}")]
    Row { row: u64, message: String },
    #[error("malformed tag list near {fragment:?}")]
    MalformedTags { fragment: String },
    #[error("unrecognized tag list format {raw:?}; expected `<a><b>` groups")]
    UnrecognizedTagFormat { raw: String },
    #[error("invalid timestamp {0:?}")]
    Timestamp(String),
    #[error("followers file: {0}")]
    Followers(String),
}
