//! Builds the concept pool: top-ranked tag segments merged with embedding
//! nearest neighbors of each event label, normalized, deduplicated and
//! filtered through a stoplist. Pool order is fixed at build time and
//! defines the feature order of everything downstream.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use crate::corpus_io::{open_lines, write_atomic, EmbeddingTable};
use crate::error::{Error, Result};
use crate::segmentation::RankedSegment;
use crate::text::normalize_phrase;

/// Where a concept came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConceptSource {
    Segment,
    Neighbor,
    Both,
}

impl ConceptSource {
    fn as_str(self) -> &'static str {
        match self {
            ConceptSource::Segment => "segment",
            ConceptSource::Neighbor => "neighbor",
            ConceptSource::Both => "both",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "segment" => Some(ConceptSource::Segment),
            "neighbor" => Some(ConceptSource::Neighbor),
            "both" => Some(ConceptSource::Both),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Concept {
    pub phrase: String,
    pub source: ConceptSource,
    /// Event labels this concept was discovered under. Empty for concepts
    /// that only arrived through the ranked-segment file, which does not
    /// carry per-event provenance.
    pub provenance_events: BTreeSet<String>,
    pub vector: Vec<f64>,
}

/// The deduplicated, ordered concept set. Order defines downstream feature
/// order, so it never changes after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ConceptPool {
    concepts: Vec<Concept>,
    embedding_dim: usize,
    index: HashMap<String, usize>,
}

impl ConceptPool {
    fn from_concepts(concepts: Vec<Concept>, embedding_dim: usize) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, c) in concepts.iter().enumerate() {
            if index.insert(c.phrase.clone(), i).is_some() {
                return Err(Error::Internal(format!(
                    "duplicate phrase {:?} in concept pool",
                    c.phrase
                )));
            }
            if c.vector.len() != embedding_dim {
                return Err(Error::Internal(format!(
                    "concept {:?} has vector dimension {}, pool has {}",
                    c.phrase,
                    c.vector.len(),
                    embedding_dim
                )));
            }
        }
        Ok(ConceptPool {
            concepts,
            embedding_dim,
            index,
        })
    }

    pub fn concepts(&self) -> &[Concept] {
        &self.concepts
    }

    pub fn embedding_dim(&self) -> usize {
        self.embedding_dim
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn position(&self, phrase: &str) -> Option<usize> {
        self.index.get(phrase).copied()
    }

    pub fn phrases(&self) -> impl Iterator<Item = &str> {
        self.concepts.iter().map(|c| c.phrase.as_str())
    }
}

/// Embeds a normalized phrase: exact vocabulary hit first, otherwise the
/// component-wise mean of its in-vocabulary words. None when no word is in
/// vocabulary; absence is a value, not an error.
pub fn embed_phrase(table: &EmbeddingTable, phrase: &str) -> Option<Vec<f64>> {
    if let Some(v) = table.get(phrase) {
        return Some(v.to_vec());
    }
    let mut sum = vec![0.0; table.dim()];
    let mut hits = 0usize;
    for word in phrase.split_whitespace() {
        if let Some(v) = table.get(word) {
            for (s, x) in sum.iter_mut().zip(v) {
                *s += x;
            }
            hits += 1;
        }
    }
    if hits == 0 {
        return None;
    }
    sum.iter_mut().for_each(|s| *s /= hits as f64);
    Some(sum)
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

/// Top-k vocabulary entries by cosine similarity to the label's embedding,
/// excluding the label itself. Ties break lexicographically.
pub fn nearest_neighbors(
    table: &EmbeddingTable,
    label: &str,
    k: usize,
) -> Result<Vec<(String, f64)>> {
    let label = normalize_phrase(label);
    let query = embed_phrase(table, &label).ok_or_else(|| {
        Error::InvalidInput(format!("label {label:?} is not embeddable with this vocabulary"))
    })?;
    let mut scored: Vec<(String, f64)> = table
        .iter()
        .filter(|(phrase, _)| *phrase != label)
        .map(|(phrase, v)| (phrase.to_string(), cosine(&query, v)))
        .collect();
    scored.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .expect("cosine is finite")
            .then_with(|| a.0.cmp(&b.0))
    });
    scored.truncate(k);
    Ok(scored)
}

/// Pool assembly parameters. Thresholds are experiment knobs; the defaults
/// keep everything.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoolParams {
    pub min_score: f64,
    /// None means unlimited.
    pub max_concepts: Option<usize>,
}

impl Default for PoolParams {
    fn default() -> Self {
        PoolParams {
            min_score: 0.0,
            max_concepts: None,
        }
    }
}

/// Builds the concept pool from ranked segments and per-event neighbor
/// lists.
///
/// Keeps segments with aggregate score at or above `min_score` plus every
/// neighbor phrase, minus stoplist entries and phrases with no embedding.
/// Duplicates merge into one concept with source `Both` and unioned
/// provenance. Order is ranked segments first (descending score), then
/// neighbors in insertion order, truncated to `max_concepts`.
pub fn build_pool(
    ranked_segments: &[RankedSegment],
    neighbor_lists: &[(String, Vec<(String, f64)>)],
    embeddings: &EmbeddingTable,
    stoplist: &HashSet<String>,
    params: &PoolParams,
) -> Result<ConceptPool> {
    let mut ordered: Vec<RankedSegment> = ranked_segments.to_vec();
    ordered.sort_by(|a, b| {
        b.aggregate_score
            .partial_cmp(&a.aggregate_score)
            .expect("scores are finite")
            .then(b.frequency.cmp(&a.frequency))
            .then(a.phrase.cmp(&b.phrase))
    });

    let mut concepts: Vec<Concept> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();

    for seg in &ordered {
        if seg.aggregate_score < params.min_score {
            continue;
        }
        let phrase = normalize_phrase(&seg.phrase);
        if phrase.is_empty() || stoplist.contains(&phrase) || index.contains_key(&phrase) {
            continue;
        }
        let Some(vector) = embed_phrase(embeddings, &phrase) else {
            continue; // unembeddable concepts cannot be clustered downstream
        };
        index.insert(phrase.clone(), concepts.len());
        concepts.push(Concept {
            phrase,
            source: ConceptSource::Segment,
            provenance_events: BTreeSet::new(),
            vector,
        });
    }

    for (event, neighbors) in neighbor_lists {
        let event = normalize_phrase(event);
        for (raw_phrase, _sim) in neighbors {
            let phrase = normalize_phrase(&raw_phrase.replace('_', " "));
            if phrase.is_empty() || stoplist.contains(&phrase) {
                continue;
            }
            if let Some(&at) = index.get(&phrase) {
                let existing = &mut concepts[at];
                if existing.source == ConceptSource::Segment {
                    existing.source = ConceptSource::Both;
                }
                existing.provenance_events.insert(event.clone());
                continue;
            }
            let Some(vector) = embed_phrase(embeddings, &phrase) else {
                continue;
            };
            index.insert(phrase.clone(), concepts.len());
            concepts.push(Concept {
                phrase,
                source: ConceptSource::Neighbor,
                provenance_events: BTreeSet::from([event.clone()]),
                vector,
            });
        }
    }

    if let Some(cap) = params.max_concepts {
        concepts.truncate(cap);
    }
    if concepts.is_empty() {
        return Err(Error::InvalidInput(
            "concept pool is empty after filtering".into(),
        ));
    }
    ConceptPool::from_concepts(concepts, embeddings.dim())
}

/// Writes a pool as "<phrase>\t<source>\t<provenance,comma-joined>" lines in
/// pool order.
pub fn save_pool(pool: &ConceptPool, path: &Path) -> Result<()> {
    let mut out = String::new();
    for c in pool.concepts() {
        let provenance: Vec<&str> = c.provenance_events.iter().map(String::as_str).collect();
        let _ = writeln!(
            out,
            "{}\t{}\t{}",
            c.phrase,
            c.source.as_str(),
            provenance.join(",")
        );
    }
    write_atomic(path, &out)
}

/// Loads just the concept order from a pool file, for stages that need the
/// ordering but not the vectors (bank training, scoring).
pub fn load_pool_order(path: &Path) -> Result<Vec<String>> {
    let mut phrases = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in open_lines(path)?.enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let phrase = line
            .split('\t')
            .next()
            .expect("split yields at least one field")
            .to_string();
        if !seen.insert(phrase.clone()) {
            return Err(Error::malformed(
                path,
                line_no,
                format!("duplicate phrase {phrase:?}"),
            ));
        }
        phrases.push(phrase);
    }
    if phrases.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{}: empty concept pool",
            path.display()
        )));
    }
    Ok(phrases)
}

/// Loads a pool file. Vectors are re-derived from the embedding table; a
/// pooled phrase that is no longer embeddable is a hard error because every
/// downstream stage needs the vector.
pub fn load_pool(path: &Path, embeddings: &EmbeddingTable) -> Result<ConceptPool> {
    let mut concepts = Vec::new();
    for (idx, line) in open_lines(path)?.enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split('\t');
        let (Some(phrase), Some(source), Some(provenance), None) =
            (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            return Err(Error::malformed(
                path,
                line_no,
                "expected \"<phrase>\\t<source>\\t<provenance>\"",
            ));
        };
        let source = ConceptSource::parse(source)
            .ok_or_else(|| Error::malformed(path, line_no, format!("unknown source {source:?}")))?;
        let phrase = phrase.to_string();
        let vector = embed_phrase(embeddings, &phrase).ok_or_else(|| {
            Error::Resolution(format!(
                "{}:{line_no}: pooled concept {phrase:?} is not embeddable with this vocabulary",
                path.display()
            ))
        })?;
        let provenance_events: BTreeSet<String> = provenance
            .split(',')
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect();
        concepts.push(Concept {
            phrase,
            source,
            provenance_events,
            vector,
        });
    }
    if concepts.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{}: empty concept pool",
            path.display()
        )));
    }
    let dim = embeddings.dim();
    ConceptPool::from_concepts(concepts, dim).map_err(|e| match e {
        Error::Internal(msg) => Error::Resolution(format!("{}: {msg}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(entries: &[(&str, &[f64])]) -> EmbeddingTable {
        let dim = entries[0].1.len();
        let mut t = EmbeddingTable::new(dim);
        for (k, v) in entries {
            t.insert(k.to_string(), v.to_vec()).unwrap();
        }
        t
    }

    #[test]
    fn exact_lookup_wins() {
        let t = table(&[("a", &[1.0, 0.0]), ("a b", &[0.0, 1.0]), ("b", &[0.5, 0.5])]);
        assert_eq!(embed_phrase(&t, "a b"), Some(vec![0.0, 1.0]));
    }

    #[test]
    fn mean_of_in_vocab_words() {
        let t = table(&[("a", &[1.0, 0.0]), ("b", &[0.0, 1.0])]);
        assert_eq!(embed_phrase(&t, "a b"), Some(vec![0.5, 0.5]));
        // out-of-vocab words are skipped, not zero-filled
        assert_eq!(embed_phrase(&t, "a zzz"), Some(vec![1.0, 0.0]));
    }

    #[test]
    fn fully_out_of_vocab_is_absent() {
        let t = table(&[("a", &[1.0, 0.0])]);
        assert_eq!(embed_phrase(&t, "x y"), None);
    }

    #[test]
    fn identical_direction_ranks_first_with_similarity_one() {
        let t = table(&[
            ("q", &[2.0, 0.0]),
            ("x", &[1.0, 0.0]),
            ("y", &[0.0, 1.0]),
        ]);
        let nn = nearest_neighbors(&t, "q", 2).unwrap();
        assert_eq!(nn[0].0, "x");
        assert_eq!(nn[0].1, 1.0);
    }

    #[test]
    fn k_larger_than_vocab_returns_everything_ranked() {
        let t = table(&[("q", &[1.0, 0.0]), ("x", &[1.0, 0.1]), ("y", &[-1.0, 0.0])]);
        let nn = nearest_neighbors(&t, "q", 10).unwrap();
        assert_eq!(nn.len(), 2);
        assert_eq!(nn[0].0, "x");
        assert_eq!(nn[1].0, "y");
    }

    #[test]
    fn ranking_matches_exhaustive_cosine() {
        let t = table(&[
            ("q", &[0.3, 0.7, 0.1]),
            ("a", &[0.2, 0.8, 0.0]),
            ("b", &[0.9, 0.0, 0.4]),
            ("c", &[0.3, 0.69, 0.11]),
            ("d", &[-0.3, -0.7, -0.1]),
        ]);
        let query = embed_phrase(&t, "q").unwrap();
        let mut expect: Vec<(String, f64)> = ["a", "b", "c", "d"]
            .iter()
            .map(|k| (k.to_string(), cosine(&query, t.get(k).unwrap())))
            .collect();
        expect.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        let nn = nearest_neighbors(&t, "q", 4).unwrap();
        assert_eq!(nn, expect);
    }

    #[test]
    fn unembeddable_label_is_error() {
        let t = table(&[("a", &[1.0])]);
        let err = nearest_neighbors(&t, "zzz", 3).unwrap_err();
        assert!(err.to_string().contains("zzz"));
    }

    fn ranked(entries: &[(&str, f64, u64)]) -> Vec<RankedSegment> {
        entries
            .iter()
            .map(|(p, s, f)| RankedSegment {
                phrase: p.to_string(),
                aggregate_score: *s,
                frequency: *f,
            })
            .collect()
    }

    #[test]
    fn duplicate_across_sources_merges_to_both() {
        let t = table(&[("parade", &[1.0, 0.0]), ("float", &[0.9, 0.1])]);
        let pool = build_pool(
            &ranked(&[("float", 2.0, 3)]),
            &[("carnival".into(), vec![("float".into(), 0.9)])],
            &t,
            &HashSet::new(),
            &PoolParams::default(),
        )
        .unwrap();
        assert_eq!(pool.len(), 1);
        let c = &pool.concepts()[0];
        assert_eq!(c.source, ConceptSource::Both);
        assert!(c.provenance_events.contains("carnival"));
    }

    #[test]
    fn stoplist_excludes() {
        let t = table(&[("slangword", &[1.0]), ("keeper", &[0.4])]);
        let stop: HashSet<String> = ["slangword".to_string()].into();
        let pool = build_pool(
            &ranked(&[("slangword", 9.0, 5), ("keeper", 1.0, 1)]),
            &[],
            &t,
            &stop,
            &PoolParams::default(),
        )
        .unwrap();
        assert_eq!(pool.len(), 1);
        assert_eq!(pool.concepts()[0].phrase, "keeper");
    }

    #[test]
    fn min_score_filters_segments_only() {
        let t = table(&[("hi", &[1.0]), ("lo", &[0.2]), ("nb", &[0.4])]);
        let pool = build_pool(
            &ranked(&[("hi", 5.0, 2), ("lo", 0.5, 1)]),
            &[("ev".into(), vec![("nb".into(), 0.8)])],
            &t,
            &HashSet::new(),
            &PoolParams {
                min_score: 1.0,
                max_concepts: None,
            },
        )
        .unwrap();
        let phrases: Vec<&str> = pool.phrases().collect();
        assert_eq!(phrases, vec!["hi", "nb"]);
    }

    #[test]
    fn unembeddable_segment_is_dropped() {
        let t = table(&[("known", &[1.0])]);
        let pool = build_pool(
            &ranked(&[("ghost", 9.0, 1), ("known", 1.0, 1)]),
            &[],
            &t,
            &HashSet::new(),
            &PoolParams::default(),
        )
        .unwrap();
        assert_eq!(pool.len(), 1);
    }

    #[test]
    fn empty_pool_is_hard_error() {
        let t = table(&[("a", &[1.0])]);
        assert!(build_pool(&[], &[], &t, &HashSet::new(), &PoolParams::default()).is_err());
    }

    #[test]
    fn pool_file_round_trips() {
        let t = table(&[
            ("wall street", &[1.0, 0.0]),
            ("parade", &[0.0, 1.0]),
            ("wall", &[0.8, 0.0]),
            ("street", &[1.2, 0.0]),
        ]);
        let pool = build_pool(
            &ranked(&[("wall street", 3.0, 2)]),
            &[("protest".into(), vec![("parade".into(), 0.7)])],
            &t,
            &HashSet::new(),
            &PoolParams::default(),
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("pool.tsv");
        save_pool(&pool, &p).unwrap();
        let loaded = load_pool(&p, &t).unwrap();
        assert_eq!(loaded, pool);
        let p2 = dir.path().join("pool2.tsv");
        save_pool(&loaded, &p2).unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), std::fs::read(&p2).unwrap());
    }
}
