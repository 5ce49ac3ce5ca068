use std::collections::BTreeMap;
use std::io::Read;

use super::IngestError;

/// Tag follower counts from the supplemental `tag,followers` file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FollowerTable {
    pub followers: BTreeMap<String, u64>,
    /// Rows whose follower value was not a non-negative integer.
    pub skipped: u64,
    /// Repeated tag names; the last occurrence wins.
    pub duplicates: u64,
}

impl FollowerTable {
    pub fn get(&self, tag: &str) -> Option<u64> {
        self.followers.get(tag).copied()
    }
}

pub fn load_followers<R: Read>(source: R) -> Result<FollowerTable, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);

    let headers = reader
        .headers()
        .map_err(|e| IngestError::Followers(e.to_string()))?
        .clone();
    let names: Vec<&str> = headers.iter().collect();
    if names != ["tag", "followers"] {
        return Err(IngestError::Followers(format!(
            "expected header `tag,followers`, found `{}`",
            names.join(",")
        )));
    }

    let mut table = FollowerTable::default();
    for record in reader.records() {
        let record = record.map_err(|e| IngestError::Followers(e.to_string()))?;
        let (Some(tag), Some(value)) = (record.get(0), record.get(1)) else {
            table.skipped += 1;
            continue;
        };
        let Ok(followers) = value.parse::<u64>() else {
            log::warn!("followers file: {tag}: {value:?} is not a count");
            table.skipped += 1;
            continue;
        };
        if table
            .followers
            .insert(tag.to_lowercase(), followers)
            .is_some()
        {
            table.duplicates += 1;
        }
    }
    Ok(table)
}
