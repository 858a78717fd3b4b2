use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::text::normalize_phrase;

use super::open_lines;

/// Corpus n-gram statistics backing the stickiness score.
///
/// Holds raw counts per word sequence up to `max_order`, plus per-order
/// totals and distinct-type counts for additive smoothing.
#[derive(Debug, Clone, Default)]
pub struct NGramTable {
    max_order: usize,
    counts: HashMap<Vec<String>, u64>,
    totals: Vec<u64>,
    distinct: Vec<u64>,
}

impl NGramTable {
    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn count(&self, words: &[String]) -> u64 {
        self.counts.get(words).copied().unwrap_or(0)
    }

    /// Total token count for one order (1-based). Zero for unseen orders.
    pub fn total(&self, order: usize) -> u64 {
        self.totals.get(order - 1).copied().unwrap_or(0)
    }

    /// Number of distinct n-grams of one order (1-based).
    pub fn distinct(&self, order: usize) -> u64 {
        self.distinct.get(order - 1).copied().unwrap_or(0)
    }

    /// Add-lambda smoothed relative frequency of `words` within its order:
    /// (count + lambda) / (total + lambda * (distinct + 1)).
    ///
    /// Strictly positive for lambda > 0, and non-decreasing in the
    /// sequence's own count.
    pub fn probability(&self, words: &[String], lambda: f64) -> f64 {
        let order = words.len();
        let c = self.count(words) as f64;
        let t = self.total(order) as f64;
        let d = self.distinct(order) as f64;
        (c + lambda) / (t + lambda * (d + 1.0))
    }

    /// Add one observation. Used by loaders and synthetic-table builders.
    pub fn add(&mut self, words: Vec<String>, count: u64) {
        let order = words.len();
        if order == 0 {
            return;
        }
        if order > self.max_order {
            self.max_order = order;
        }
        while self.totals.len() < order {
            self.totals.push(0);
            self.distinct.push(0);
        }
        self.totals[order - 1] += count;
        match self.counts.entry(words) {
            std::collections::hash_map::Entry::Occupied(mut e) => *e.get_mut() += count,
            std::collections::hash_map::Entry::Vacant(e) => {
                e.insert(count);
                self.distinct[order - 1] += 1;
            }
        }
    }
}

/// Loads tab-separated n-gram counts: "<words space-separated>\t<count>".
/// Repeated n-grams accumulate. The table's max order is the longest
/// sequence observed.
pub fn load_ngram_counts(path: &Path) -> Result<NGramTable> {
    let mut table = NGramTable::default();
    for (idx, line) in open_lines(path)?.enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let (ngram, count) = line
            .split_once('\t')
            .ok_or_else(|| Error::malformed(path, line_no, "expected \"<ngram>\\t<count>\""))?;
        let count: u64 = count
            .trim()
            .parse()
            .map_err(|_| Error::malformed(path, line_no, format!("bad count {count:?}")))?;
        let words: Vec<String> = normalize_phrase(ngram)
            .split_whitespace()
            .map(str::to_string)
            .collect();
        if words.is_empty() {
            return Err(Error::malformed(path, line_no, "empty n-gram"));
        }
        table.add(words, count);
    }
    if table.max_order == 0 {
        return Err(Error::InvalidInput(format!(
            "{}: empty n-gram table",
            path.display()
        )));
    }
    Ok(table)
}
