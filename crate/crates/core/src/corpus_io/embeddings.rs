use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::text::normalize_phrase;

use super::{open_lines, Warning};

/// A vocabulary of dense vectors, all of one dimension, keyed by normalized
/// token or phrase. Multi-word keys are stored space-separated ("new york").
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    dim: usize,
    entries: HashMap<String, Vec<f64>>,
}

/// How to treat keys found in the embedding file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeyPolicy {
    /// Normalize every key on load (underscores decoded to spaces first).
    Normalize,
    /// Expect keys to already be normalized; any violation is a hard error
    /// naming the offending line.
    ExpectNormalized,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            entries: HashMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &str) -> Option<&[f64]> {
        self.entries.get(key).map(|v| v.as_slice())
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    /// Iteration order is unspecified; callers that need determinism must
    /// sort (as `nearest_neighbors` does).
    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Insert a vector, first key wins. Returns false if the key was taken.
    pub fn insert(&mut self, key: String, vector: Vec<f64>) -> Result<bool> {
        if vector.len() != self.dim {
            return Err(Error::InvalidInput(format!(
                "embedding for {key:?} has dimension {}, table has {}",
                vector.len(),
                self.dim
            )));
        }
        if !vector.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "embedding for {key:?} contains a non-finite component"
            )));
        }
        if self.entries.contains_key(&key) {
            return Ok(false);
        }
        self.entries.insert(key, vector);
        Ok(true)
    }
}

/// Loads a plain-text embedding file.
///
/// Line 1 declares "<vocab_size> <dim>"; each following line is a token
/// (spaces inside phrases encoded as "_") followed by `dim` decimal reals.
/// Duplicate keys after normalization: first occurrence wins, one warning
/// per duplicate. Keys that normalize to the empty string are skipped with
/// a warning.
pub fn load_embeddings(path: &Path, policy: KeyPolicy) -> Result<(EmbeddingTable, Vec<Warning>)> {
    let mut lines = open_lines(path)?;
    let header = lines
        .next()
        .ok_or_else(|| Error::malformed(path, 1, "empty file, expected \"<vocab_size> <dim>\" header"))?
        .map_err(|e| Error::io(path, e))?;
    let mut parts = header.split_whitespace();
    let declared: usize = parts
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::malformed(path, 1, "header must start with vocab size"))?;
    let dim: usize = parts
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::malformed(path, 1, "header must declare dimension"))?;
    if dim == 0 {
        return Err(Error::malformed(path, 1, "dimension must be positive"));
    }
    if parts.next().is_some() {
        return Err(Error::malformed(path, 1, "header has trailing fields"));
    }

    let mut table = EmbeddingTable::new(dim);
    let mut warnings = Vec::new();
    let mut rows = 0usize;
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        rows += 1;
        let mut toks = line.split_whitespace();
        let raw_key = toks.next().expect("non-empty line has a first token");
        let values: Vec<&str> = toks.collect();
        if values.len() != dim {
            return Err(Error::malformed(
                path,
                line_no,
                format!(
                    "row has {} components, header declares {}",
                    values.len(),
                    dim
                ),
            ));
        }
        let decoded = raw_key.replace('_', " ");
        let key = match policy {
            KeyPolicy::Normalize => normalize_phrase(&decoded),
            KeyPolicy::ExpectNormalized => {
                let norm = normalize_phrase(&decoded);
                if norm != decoded {
                    return Err(Error::malformed(
                        path,
                        line_no,
                        format!("key {raw_key:?} is not normalized (expected {norm:?})"),
                    ));
                }
                norm
            }
        };
        if key.is_empty() {
            warnings.push(format!(
                "{}:{line_no}: key {raw_key:?} normalizes to empty, skipped",
                path.display()
            ));
            continue;
        }
        let mut vector = Vec::with_capacity(dim);
        for tok in values {
            vector.push(super::parse_f64(path, line_no, tok)?);
        }
        if !table.insert(key.clone(), vector)? {
            warnings.push(format!(
                "{}:{line_no}: duplicate key {key:?}, first occurrence kept",
                path.display()
            ));
        }
    }
    if rows != declared {
        warnings.push(format!(
            "{}: header declares {declared} entries, file has {rows}",
            path.display()
        ));
    }
    Ok((table, warnings))
}
