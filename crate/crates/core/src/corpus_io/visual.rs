use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::text::normalize_phrase;

use super::open_lines;

/// Visual representativeness scores keyed by normalized phrase, with a
/// default for phrases missing from the table.
#[derive(Debug, Clone)]
pub struct VisualRepTable {
    entries: HashMap<String, f64>,
    default_score: f64,
}

impl VisualRepTable {
    /// Builds a table from entries; `default_score` falls back to the median
    /// of the loaded scores when not overridden. Zero would veto phrases the
    /// table has never seen, the median is scale-neutral.
    pub fn new(entries: HashMap<String, f64>, default_override: Option<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidInput("empty visual-rep table".into()));
        }
        for (phrase, score) in &entries {
            if !(0.0..=1.0).contains(score) {
                return Err(Error::InvalidInput(format!(
                    "visual-rep score {score} for {phrase:?} outside [0, 1]"
                )));
            }
        }
        let default_score = match default_override {
            Some(v) => {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidInput(format!(
                        "default visual-rep score {v} outside [0, 1]"
                    )));
                }
                v
            }
            None => median(entries.values().copied()),
        };
        Ok(VisualRepTable {
            entries,
            default_score,
        })
    }

    pub fn default_score(&self) -> f64 {
        self.default_score
    }

    /// Score for a normalized phrase, or the default when absent.
    pub fn score(&self, phrase: &str) -> f64 {
        self.entries
            .get(phrase)
            .copied()
            .unwrap_or(self.default_score)
    }

    pub fn contains(&self, phrase: &str) -> bool {
        self.entries.contains_key(phrase)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn median(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(|a, b| a.partial_cmp(b).expect("scores validated finite"));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Loads a tab-separated visual-rep table: "<phrase>\t<score in [0,1]>".
pub fn load_visual_rep(path: &Path, default_override: Option<f64>) -> Result<VisualRepTable> {
    let mut entries = HashMap::new();
    for (idx, line) in open_lines(path)?.enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let (phrase, score) = line
            .split_once('\t')
            .ok_or_else(|| Error::malformed(path, line_no, "expected \"<phrase>\\t<score>\""))?;
        let score = super::parse_f64(path, line_no, score.trim())?;
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::malformed(
                path,
                line_no,
                format!("score {score} outside [0, 1]"),
            ));
        }
        let key = normalize_phrase(phrase);
        if key.is_empty() {
            return Err(Error::malformed(path, line_no, "phrase normalizes to empty"));
        }
        entries.insert(key, score);
    }
    VisualRepTable::new(entries, default_override)
}
