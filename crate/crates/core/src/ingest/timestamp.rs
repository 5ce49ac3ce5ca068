use chrono::{DateTime, NaiveDateTime, Timelike, Utc};

use super::IngestError;

/// Parses a dump timestamp such as `2008-07-31T21:42:52.167`.
///
/// Dump timestamps carry no zone suffix and are UTC. A trailing `Z` is
/// tolerated. Sub-second digits are dropped.
pub fn parse_dump_timestamp(raw: &str) -> Result<DateTime<Utc>, IngestError> {
    let trimmed = raw.trim().trim_end_matches('Z');
    let naive = NaiveDateTime::parse_from_str(trimmed, "%Y-%m-%dT%H:%M:%S%.f")
        .map_err(|_| IngestError::Timestamp(raw.to_string()))?;
    let naive = naive
        .with_nanosecond(0)
        .ok_or_else(|| IngestError::Timestamp(raw.to_string()))?;
    Ok(naive.and_utc())
}

pub fn format_dump_timestamp(t: &DateTime<Utc>) -> String {
    t.format("%Y-%m-%dT%H:%M:%S%.3f").to_string()
}
