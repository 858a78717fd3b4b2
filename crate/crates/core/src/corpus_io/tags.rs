use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::text::{normalize_phrase, normalize_words};

use super::{open_lines, Warning};

/// One tag: the word list attached to a single crawled image, plus the event
/// label whose query produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagRecord {
    pub event_label: String,
    pub tag_words: Vec<String>,
}

impl TagRecord {
    /// Builds a record from raw strings, normalizing everything. Returns
    /// None if no token survives normalization.
    pub fn new<S: AsRef<str>>(event_label: &str, words: &[S]) -> Option<TagRecord> {
        let event_label = normalize_phrase(event_label);
        let tag_words = normalize_words(words);
        if event_label.is_empty() || tag_words.is_empty() {
            return None;
        }
        Some(TagRecord {
            event_label,
            tag_words,
        })
    }
}

#[derive(Deserialize)]
struct RawRecord {
    #[serde(alias = "event")]
    event_label: String,
    tags: Vec<String>,
}

/// Loads a line-delimited tag corpus. Each line is a JSON object with an
/// `event_label` (alias `event`) and a `tags` word list; unknown fields are
/// ignored. Records whose tag list is empty after normalization are dropped
/// with a warning.
pub fn load_tag_corpus(path: &Path) -> Result<(Vec<TagRecord>, Vec<Warning>)> {
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    for (idx, line) in open_lines(path)?.enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(&line)
            .map_err(|e| Error::malformed(path, line_no, format!("bad record: {e}")))?;
        match TagRecord::new(&raw.event_label, &raw.tags) {
            Some(rec) => records.push(rec),
            None => warnings.push(format!(
                "{}:{line_no}: record for {:?} has no usable tokens, skipped",
                path.display(),
                raw.event_label
            )),
        }
    }
    Ok((records, warnings))
}
