//! Tag segmentation: splits each tag into consecutive, non-overlapping
//! segments maximizing total stickiness, then scores segments by
//! stickiness times visual representativeness.
//!
//! Stickiness of a candidate segment s:
//!
//!   Stk(s) = lenPrior(|s|) * 2 / (1 + exp(-SCP(s)))
//!   lenPrior(l) = l / (l + 1)
//!   SCP(w)  = ln P(w)                                   for single words
//!   SCP(s)  = ln( P(s)^2 / mean_i P(prefix_i) P(suffix_i) )  otherwise
//!
//! with P the add-lambda smoothed relative frequency within the segment's
//! order. The provider is pluggable, so the DP never hardcodes the formula.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::corpus_io::{open_lines, write_atomic, NGramTable, TagRecord, VisualRepTable};
use crate::error::{Error, Result};

/// A candidate phrase: a run of consecutive words within one tag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub words: Vec<String>,
    /// Index of the first word within the tag.
    pub start: usize,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn phrase(&self) -> String {
        self.words.join(" ")
    }
}

/// A segment together with its stickiness, visual representativeness and
/// final score (the product of the two).
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredSegment {
    pub segment: Segment,
    pub stickiness: f64,
    pub visual_rep: f64,
    pub final_score: f64,
}

/// The optimal segmentation of one tag.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationResult {
    pub tag: TagRecord,
    pub segments: Vec<Segment>,
    /// Stickiness per segment, parallel to `segments`.
    pub stickiness: Vec<f64>,
    pub total_stickiness: f64,
}

/// Knobs for the corpus-backed stickiness formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StickinessParams {
    /// Additive smoothing weight; 1.0 is add-one.
    pub smoothing: f64,
}

impl Default for StickinessParams {
    fn default() -> Self {
        StickinessParams { smoothing: 1.0 }
    }
}

/// Anything that can score a word run. Implemented by the corpus-backed
/// formula below and by closures in tests.
pub trait StickinessProvider {
    fn stickiness(&self, words: &[String]) -> Result<f64>;
}

impl<F> StickinessProvider for F
where
    F: Fn(&[String]) -> Result<f64>,
{
    fn stickiness(&self, words: &[String]) -> Result<f64> {
        self(words)
    }
}

/// Corpus-backed stickiness of one segment.
///
/// Strictly positive (smoothing floors every probability) and non-decreasing
/// in the segment's own count with all other counts held fixed.
pub fn stickiness(ngrams: &NGramTable, words: &[String], params: &StickinessParams) -> Result<f64> {
    if words.is_empty() {
        return Err(Error::InvalidInput("empty segment".into()));
    }
    if words.len() > ngrams.max_order() {
        return Err(Error::InvalidInput(format!(
            "segment {:?} has {} words but the n-gram table only covers order {}; \
             rebuild the counts with a higher max order",
            words.join(" "),
            words.len(),
            ngrams.max_order()
        )));
    }
    let lambda = params.smoothing;
    let scp = if words.len() == 1 {
        ngrams.probability(words, lambda).ln()
    } else {
        let p = ngrams.probability(words, lambda);
        let splits = (words.len() - 1) as f64;
        let mean_split: f64 = (1..words.len())
            .map(|i| {
                ngrams.probability(&words[..i], lambda) * ngrams.probability(&words[i..], lambda)
            })
            .sum::<f64>()
            / splits;
        (p * p / mean_split).ln()
    };
    let len_prior = words.len() as f64 / (words.len() as f64 + 1.0);
    let squashed = 2.0 / (1.0 + (-scp).exp());
    Ok((len_prior * squashed).max(f64::MIN_POSITIVE))
}

/// Convenience provider bundling an n-gram table with its parameters.
pub struct CorpusStickiness<'a> {
    pub ngrams: &'a NGramTable,
    pub params: StickinessParams,
}

impl StickinessProvider for CorpusStickiness<'_> {
    fn stickiness(&self, words: &[String]) -> Result<f64> {
        stickiness(self.ngrams, words, &self.params)
    }
}

/// Splits a tag into the stickiness-maximal segmentation with segments of at
/// most `max_len` words.
///
/// Ties are broken by fewer segments, then by the lexicographically smallest
/// vector of boundary positions, so the result is deterministic.
pub fn segment_tag(
    tag: &TagRecord,
    provider: &dyn StickinessProvider,
    max_len: usize,
) -> Result<SegmentationResult> {
    let n = tag.tag_words.len();
    if n == 0 {
        return Err(Error::InvalidInput("cannot segment an empty tag".into()));
    }
    if max_len == 0 {
        return Err(Error::InvalidInput("max segment length must be positive".into()));
    }

    #[derive(Clone)]
    struct Best {
        score: f64,
        count: usize,
        /// Start index of every segment except the first.
        boundaries: Vec<usize>,
    }

    // best[i]: optimal segmentation of words[..i]
    let mut best: Vec<Option<Best>> = vec![None; n + 1];
    best[0] = Some(Best {
        score: 0.0,
        count: 0,
        boundaries: Vec::new(),
    });

    for end in 1..=n {
        let mut current: Option<Best> = None;
        for start in end.saturating_sub(max_len)..end {
            let Some(prefix) = best[start].clone() else {
                continue;
            };
            let stk = provider.stickiness(&tag.tag_words[start..end])?;
            let mut boundaries = prefix.boundaries;
            if start > 0 {
                boundaries.push(start);
            }
            let candidate = Best {
                score: prefix.score + stk,
                count: prefix.count + 1,
                boundaries,
            };
            let replace = match &current {
                None => true,
                Some(incumbent) => {
                    candidate.score > incumbent.score
                        || (candidate.score == incumbent.score
                            && (candidate.count < incumbent.count
                                || (candidate.count == incumbent.count
                                    && candidate.boundaries < incumbent.boundaries)))
                }
            };
            if replace {
                current = Some(candidate);
            }
        }
        best[end] = current;
    }

    let solution = best[n]
        .take()
        .ok_or_else(|| Error::Internal("dp table has no terminal state".into()))?;

    let mut starts = vec![0usize];
    starts.extend(&solution.boundaries);
    starts.push(n);
    let mut segments = Vec::with_capacity(solution.count);
    let mut stickiness_values = Vec::with_capacity(solution.count);
    for w in starts.windows(2) {
        let seg = Segment {
            words: tag.tag_words[w[0]..w[1]].to_vec(),
            start: w[0],
        };
        stickiness_values.push(provider.stickiness(&seg.words)?);
        segments.push(seg);
    }
    Ok(SegmentationResult {
        tag: tag.clone(),
        segments,
        stickiness: stickiness_values,
        total_stickiness: solution.score,
    })
}

/// Attaches the visual-representativeness factor: final score is the product
/// of stickiness and the table's score for the segment's phrase (falling
/// back to the table default when absent).
pub fn score_segment(segment: &Segment, stickiness: f64, vrep: &VisualRepTable) -> ScoredSegment {
    let visual_rep = vrep.score(&segment.phrase());
    ScoredSegment {
        final_score: stickiness * visual_rep,
        segment: segment.clone(),
        stickiness,
        visual_rep,
    }
}

/// One entry in the corpus-wide segment ranking.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedSegment {
    pub phrase: String,
    pub aggregate_score: f64,
    pub frequency: u64,
}

/// Aggregates segment scores across a segmented corpus: each occurrence of a
/// phrase contributes its final score, so recurring phrases accumulate.
/// Sorted by aggregate score, then frequency, then phrase.
pub fn rank_segments(corpus: &[SegmentationResult], vrep: &VisualRepTable) -> Vec<RankedSegment> {
    let mut agg: HashMap<String, (f64, u64)> = HashMap::new();
    for result in corpus {
        for (segment, &stk) in result.segments.iter().zip(&result.stickiness) {
            let scored = score_segment(segment, stk, vrep);
            let entry = agg.entry(scored.segment.phrase()).or_insert((0.0, 0));
            entry.0 += scored.final_score;
            entry.1 += 1;
        }
    }
    let mut ranked: Vec<RankedSegment> = agg
        .into_iter()
        .map(|(phrase, (aggregate_score, frequency))| RankedSegment {
            phrase,
            aggregate_score,
            frequency,
        })
        .collect();
    ranked.sort_by(|a, b| {
        b.aggregate_score
            .partial_cmp(&a.aggregate_score)
            .expect("scores are finite")
            .then(b.frequency.cmp(&a.frequency))
            .then(a.phrase.cmp(&b.phrase))
    });
    ranked
}

/// Writes a ranking as tab-separated "<phrase>\t<score>\t<frequency>" lines.
pub fn save_ranked_segments(ranked: &[RankedSegment], path: &Path) -> Result<()> {
    let mut out = String::new();
    for r in ranked {
        let _ = writeln!(out, "{}\t{}\t{}", r.phrase, r.aggregate_score, r.frequency);
    }
    write_atomic(path, &out)
}

pub fn load_ranked_segments(path: &Path) -> Result<Vec<RankedSegment>> {
    let mut ranked = Vec::new();
    for (idx, line) in open_lines(path)?.enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split('\t');
        let (Some(phrase), Some(score), Some(freq), None) =
            (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            return Err(Error::malformed(
                path,
                line_no,
                "expected \"<phrase>\\t<score>\\t<frequency>\"",
            ));
        };
        ranked.push(RankedSegment {
            phrase: phrase.to_string(),
            aggregate_score: crate::corpus_io::parse_f64(path, line_no, score)?,
            frequency: freq
                .parse()
                .map_err(|_| Error::malformed(path, line_no, format!("bad frequency {freq:?}")))?,
        });
    }
    Ok(ranked)
}
