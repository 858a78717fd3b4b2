use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::text::normalize_phrase;

use super::{open_lines, write_atomic, FeatureMatrix};

/// Maps each concept to the image ids crawled for it. Image ids must resolve
/// in the companion feature matrix; an image may appear under several
/// concepts (search engines return overlapping results for correlated
/// queries), which is exactly why negative-set construction has to exclude
/// cluster-mates' images downstream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConceptImageManifest {
    concepts: Vec<String>,
    images: HashMap<String, Vec<String>>,
}

impl ConceptImageManifest {
    pub fn concepts(&self) -> &[String] {
        &self.concepts
    }

    pub fn images(&self, concept: &str) -> Option<&[String]> {
        self.images.get(concept).map(|v| v.as_slice())
    }

    pub fn contains(&self, concept: &str) -> bool {
        self.images.contains_key(concept)
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }
}

/// Loads a concept-image manifest: one record per line,
/// "<concept>\t<image_id>,<image_id>,...". Every image id must resolve in
/// `features`; offenders are listed in the error.
pub fn load_manifest(path: &Path, features: &FeatureMatrix) -> Result<ConceptImageManifest> {
    let mut concepts = Vec::new();
    let mut images: HashMap<String, Vec<String>> = HashMap::new();
    let mut missing: Vec<String> = Vec::new();
    for (idx, line) in open_lines(path)?.enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let (concept, ids) = line
            .split_once('\t')
            .ok_or_else(|| Error::malformed(path, line_no, "expected \"<concept>\\t<id,...>\""))?;
        let concept = normalize_phrase(concept);
        if concept.is_empty() {
            return Err(Error::malformed(path, line_no, "concept normalizes to empty"));
        }
        if images.contains_key(&concept) {
            return Err(Error::malformed(
                path,
                line_no,
                format!("duplicate concept {concept:?}"),
            ));
        }
        let mut list = Vec::new();
        let mut seen = HashSet::new();
        for id in ids.split(',') {
            let id = id.trim();
            if id.is_empty() {
                continue;
            }
            if !seen.insert(id.to_string()) {
                return Err(Error::malformed(
                    path,
                    line_no,
                    format!("image id {id:?} listed twice for {concept:?}"),
                ));
            }
            if !features.contains(id) {
                missing.push(format!("{concept}: {id}"));
            }
            list.push(id.to_string());
        }
        if list.is_empty() {
            return Err(Error::malformed(
                path,
                line_no,
                format!("concept {concept:?} has an empty image list"),
            ));
        }
        concepts.push(concept.clone());
        images.insert(concept, list);
    }
    if !missing.is_empty() {
        return Err(Error::Resolution(format!(
            "{}: {} image id(s) missing from the feature matrix: {}",
            path.display(),
            missing.len(),
            missing.join(", ")
        )));
    }
    Ok(ConceptImageManifest { concepts, images })
}

pub fn save_manifest(manifest: &ConceptImageManifest, path: &Path) -> Result<()> {
    let mut out = String::new();
    for concept in &manifest.concepts {
        let _ = writeln!(out, "{}\t{}", concept, manifest.images[concept].join(","));
    }
    write_atomic(path, &out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn features() -> FeatureMatrix {
        let mut m = FeatureMatrix::new(1);
        for id in ["i1", "i2", "i3"] {
            m.push(id.into(), vec![0.0]).unwrap();
        }
        m
    }

    #[test]
    fn loads_concept_lists() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(b"birthday cake\ti1,i2\nparade\ti3\n").unwrap();
        let m = load_manifest(f.path(), &features()).unwrap();
        assert_eq!(m.concepts(), &["birthday cake", "parade"]);
        assert_eq!(m.images("birthday cake").unwrap(), &["i1", "i2"]);
    }

    #[test]
    fn unknown_image_id_names_offender() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(b"parade\ti1,ghost\n").unwrap();
        let err = load_manifest(f.path(), &features()).unwrap_err();
        assert!(err.to_string().contains("ghost"), "{err}");
    }

    #[test]
    fn empty_list_is_error() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(b"parade\t\n").unwrap();
        assert!(load_manifest(f.path(), &features()).is_err());
    }

    #[test]
    fn round_trip() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(b"parade\ti1,i3\nconcert\ti2\n").unwrap();
        let m = load_manifest(f.path(), &features()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.tsv");
        save_manifest(&m, &p).unwrap();
        let again = load_manifest(&p, &features()).unwrap();
        assert_eq!(m, again);
        assert_eq!(
            std::fs::read_to_string(f.path()).unwrap(),
            std::fs::read_to_string(&p).unwrap()
        );
    }
}
