//! Loading and validation of every external data artifact, plus persistence
//! of trained concept banks.
//!
//! All loaded tables are immutable after construction and safe to share
//! across threads. Loaders are total: malformed input yields a structured
//! error, never a half-populated table. Warnings (recoverable oddities such
//! as duplicate embedding keys) are returned to the caller rather than
//! logged, so library users decide what to do with them.

mod bank;
mod embeddings;
mod features;
mod manifest;
mod ngrams;
mod tags;
mod visual;

pub use bank::{load_bank, save_bank};
pub use embeddings::{load_embeddings, EmbeddingTable, KeyPolicy};
pub use features::{load_features, load_labels, save_features, FeatureMatrix};
pub use manifest::{load_manifest, save_manifest, ConceptImageManifest};
pub use ngrams::{load_ngram_counts, NGramTable};
pub use tags::{load_tag_corpus, TagRecord};
pub use visual::{load_visual_rep, VisualRepTable};

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};

/// A loader warning: something recoverable that the caller should surface.
pub type Warning = String;

pub(crate) fn open_lines(path: &Path) -> Result<impl Iterator<Item = std::io::Result<String>>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(BufReader::new(file).lines())
}

/// Writes `contents` to `path` atomically: a temp file in the same directory
/// is renamed over the target, so a failed stage never leaves a partial
/// artifact behind.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut tmp = tempfile_path(dir, path);
    let mut attempt = 0;
    while tmp.exists() {
        attempt += 1;
        tmp = dir.join(format!(
            ".{}.tmp{}",
            path.file_name().map(|n| n.to_string_lossy()).unwrap_or_default(),
            attempt
        ));
    }
    std::fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

fn tempfile_path(dir: &Path, target: &Path) -> std::path::PathBuf {
    dir.join(format!(
        ".{}.tmp",
        target
            .file_name()
            .map(|n| n.to_string_lossy())
            .unwrap_or_default()
    ))
}

pub(crate) fn parse_f64(path: &Path, line_no: usize, tok: &str) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| Error::malformed(path, line_no, format!("not a number: {tok:?}")))?;
    if !v.is_finite() {
        return Err(Error::malformed(
            path,
            line_no,
            format!("non-finite value: {tok:?}"),
        ));
    }
    Ok(v)
}
