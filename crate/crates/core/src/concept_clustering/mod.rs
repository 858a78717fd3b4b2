//! Clusters concept embeddings and derives per-concept training manifests.
//!
//! Concepts sharing a cluster are treated as correlated: their images are
//! ineligible as negatives for each other, which is the module's central
//! correctness property.

mod kmeans;

pub use kmeans::{minibatch_kmeans, KMeansOutcome, KMeansParams};

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::concept_discovery::ConceptPool;
use crate::corpus_io::{open_lines, write_atomic, ConceptImageManifest};
use crate::error::{Error, Result};

/// Cluster structure over a concept pool: centroids plus the phrase-level
/// assignment. The persisted artifact keeps only the assignment; centroids
/// are a training byproduct.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    assignment: ClusterAssignment,
}

impl ClusterModel {
    pub fn assignment(&self) -> &ClusterAssignment {
        &self.assignment
    }

    pub fn into_assignment(self) -> ClusterAssignment {
        self.assignment
    }
}

/// Phrase -> cluster id mapping in pool order.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    phrases: Vec<String>,
    ids: Vec<usize>,
    index: HashMap<String, usize>,
    k: usize,
}

impl ClusterAssignment {
    fn new(phrases: Vec<String>, ids: Vec<usize>) -> Result<Self> {
        if phrases.len() != ids.len() {
            return Err(Error::Internal("assignment length mismatch".into()));
        }
        let mut index = HashMap::new();
        for (i, p) in phrases.iter().enumerate() {
            if index.insert(p.clone(), i).is_some() {
                return Err(Error::InvalidInput(format!(
                    "concept {p:?} assigned to a cluster twice"
                )));
            }
        }
        let k = ids.iter().copied().max().map_or(0, |m| m + 1);
        Ok(ClusterAssignment {
            phrases,
            ids,
            index,
            k,
        })
    }

    pub fn len(&self) -> usize {
        self.phrases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn cluster_of(&self, phrase: &str) -> Option<usize> {
        self.index.get(phrase).map(|i| self.ids[*i])
    }

    /// (phrase, cluster id) pairs in pool order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.phrases
            .iter()
            .map(String::as_str)
            .zip(self.ids.iter().copied())
    }

    /// Checks that every pooled concept is assigned exactly once.
    pub fn validate_pool(&self, pool: &ConceptPool) -> Result<()> {
        let mut missing = Vec::new();
        for phrase in pool.phrases() {
            if self.cluster_of(phrase).is_none() {
                missing.push(phrase.to_string());
            }
        }
        if !missing.is_empty() {
            return Err(Error::Resolution(format!(
                "{} pooled concept(s) missing from the cluster assignment: {}",
                missing.len(),
                missing.join(", ")
            )));
        }
        if self.len() != pool.len() {
            return Err(Error::Resolution(format!(
                "cluster assignment covers {} concepts, pool has {}",
                self.len(),
                pool.len()
            )));
        }
        Ok(())
    }
}

/// Clusters a pool's embedding vectors. `k` is clamped to the pool size so
/// desk-scale pools keep working with the paper-scale default.
pub fn cluster_pool(pool: &ConceptPool, params: &KMeansParams) -> Result<ClusterModel> {
    let effective = KMeansParams {
        k: params.k.min(pool.len()),
        ..*params
    };
    if effective.k < params.k {
        log::info!(
            "clamping k from {} to pool size {}",
            params.k,
            pool.len()
        );
    }
    let vectors: Vec<Vec<f64>> = pool.concepts().iter().map(|c| c.vector.clone()).collect();
    let outcome = minibatch_kmeans(&vectors, &effective)?;
    let assignment = ClusterAssignment::new(
        pool.phrases().map(str::to_string).collect(),
        outcome.assignments,
    )?;
    Ok(ClusterModel {
        k: effective.k,
        centroids: outcome.centroids,
        assignment,
    })
}

/// All pool concepts sharing `concept`'s cluster, including the concept
/// itself, in pool order.
pub fn positive_set(assignment: &ClusterAssignment, concept: &str) -> Result<Vec<String>> {
    let cluster = assignment
        .cluster_of(concept)
        .ok_or_else(|| Error::InvalidInput(format!("unknown concept {concept:?}")))?;
    Ok(assignment
        .iter()
        .filter(|(_, id)| *id == cluster)
        .map(|(p, _)| p.to_string())
        .collect())
}

/// Training image sets for one concept classifier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingManifest {
    pub concept: String,
    pub positives: Vec<String>,
    pub negatives: Vec<String>,
}

/// Builds the classifier training manifest for `concept`.
///
/// Positives are every image crawled for the concept. Negatives are a
/// seeded uniform sample (without replacement) from images of concepts
/// outside the positive set; any image that also appears under a
/// positive-set concept is excluded entirely. The sample size is
/// neg_ratio * |positives|, capped at availability.
pub fn build_training_manifest(
    concept: &str,
    assignment: &ClusterAssignment,
    images: &ConceptImageManifest,
    neg_ratio: f64,
    seed: u64,
) -> Result<TrainingManifest> {
    if !(neg_ratio > 0.0) {
        return Err(Error::InvalidInput(format!(
            "neg_ratio must be positive, got {neg_ratio}"
        )));
    }
    let positives: Vec<String> = images
        .images(concept)
        .ok_or_else(|| {
            Error::InvalidInput(format!("concept {concept:?} has no images in the manifest"))
        })?
        .to_vec();

    let pos_concepts = positive_set(assignment, concept)?;
    let pos_concept_set: HashSet<&str> = pos_concepts.iter().map(String::as_str).collect();
    let mut excluded_images: HashSet<&str> = HashSet::new();
    for p in &pos_concepts {
        if let Some(list) = images.images(p) {
            excluded_images.extend(list.iter().map(String::as_str));
        }
    }

    let mut eligible: Vec<&str> = Vec::new();
    let mut seen: HashSet<&str> = HashSet::new();
    for (other, _) in assignment.iter() {
        if pos_concept_set.contains(other) {
            continue;
        }
        let Some(list) = images.images(other) else {
            continue;
        };
        for id in list {
            let id = id.as_str();
            if excluded_images.contains(id) || !seen.insert(id) {
                continue;
            }
            eligible.push(id);
        }
    }
    if eligible.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no negative-eligible images for {concept:?}: its cluster covers every concept with images"
        )));
    }

    let want = ((neg_ratio * positives.len() as f64).floor() as usize).max(1);
    let take = want.min(eligible.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // partial Fisher-Yates over the deterministic eligible order
    let mut pool: Vec<&str> = eligible;
    for i in 0..take {
        let j = rng.gen_range(i..pool.len());
        pool.swap(i, j);
    }
    let negatives: Vec<String> = pool[..take].iter().map(|s| s.to_string()).collect();

    Ok(TrainingManifest {
        concept: concept.to_string(),
        positives,
        negatives,
    })
}

/// Writes a cluster assignment as "<phrase>\t<cluster_id>" lines in pool
/// order.
pub fn save_cluster_assignment(assignment: &ClusterAssignment, path: &Path) -> Result<()> {
    let mut out = String::new();
    for (phrase, id) in assignment.iter() {
        let _ = writeln!(out, "{phrase}\t{id}");
    }
    write_atomic(path, &out)
}

pub fn load_cluster_assignment(path: &Path) -> Result<ClusterAssignment> {
    let mut phrases = Vec::new();
    let mut ids = Vec::new();
    for (idx, line) in open_lines(path)?.enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let (phrase, id) = line
            .split_once('\t')
            .ok_or_else(|| Error::malformed(path, line_no, "expected \"<phrase>\\t<cluster_id>\""))?;
        let id: usize = id
            .trim()
            .parse()
            .map_err(|_| Error::malformed(path, line_no, format!("bad cluster id {id:?}")))?;
        phrases.push(phrase.to_string());
        ids.push(id);
    }
    if phrases.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{}: empty cluster assignment",
            path.display()
        )));
    }
    ClusterAssignment::new(phrases, ids)
}

/// Writes one training manifest, line-delimited:
/// a `concept` line, then one `positive`/`negative` line per image id.
pub fn save_training_manifest(manifest: &TrainingManifest, path: &Path) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "concept\t{}", manifest.concept);
    for id in &manifest.positives {
        let _ = writeln!(out, "positive\t{id}");
    }
    for id in &manifest.negatives {
        let _ = writeln!(out, "negative\t{id}");
    }
    write_atomic(path, &out)
}

pub fn load_training_manifest(path: &Path) -> Result<TrainingManifest> {
    let mut concept: Option<String> = None;
    let mut positives = Vec::new();
    let mut negatives = Vec::new();
    for (idx, line) in open_lines(path)?.enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let (kind, value) = line
            .split_once('\t')
            .ok_or_else(|| Error::malformed(path, line_no, "expected \"<kind>\\t<value>\""))?;
        match kind {
            "concept" => {
                if concept.replace(value.to_string()).is_some() {
                    return Err(Error::malformed(path, line_no, "two concept lines"));
                }
            }
            "positive" => positives.push(value.to_string()),
            "negative" => negatives.push(value.to_string()),
            other => {
                return Err(Error::malformed(
                    path,
                    line_no,
                    format!("unknown record kind {other:?}"),
                ))
            }
        }
    }
    let concept = concept
        .ok_or_else(|| Error::InvalidInput(format!("{}: missing concept line", path.display())))?;
    Ok(TrainingManifest {
        concept,
        positives,
        negatives,
    })
}
