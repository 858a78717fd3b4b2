//! Token and phrase normalization.
//!
//! Every string that crosses a module boundary (tag tokens, embedding keys,
//! concept phrases, vrep keys, stoplist entries) goes through the same
//! normalizer: Unicode lowercasing, whitespace collapse, trimming, and
//! punctuation stripped at token boundaries. Interior punctuation is kept,
//! so "rock'n'roll" survives while "(protest)" becomes "protest".

/// Normalize a single token: lowercase, strip non-alphanumeric characters
/// from both ends. May return the empty string (e.g. for "--").
pub fn normalize_token(raw: &str) -> String {
    let lowered = raw.to_lowercase();
    lowered
        .trim_matches(|c: char| !c.is_alphanumeric())
        .to_string()
}

/// Normalize a phrase: split on whitespace, normalize each token, drop
/// tokens that normalize to empty, join with single spaces.
///
/// Idempotent: `normalize_phrase(normalize_phrase(s)) == normalize_phrase(s)`.
pub fn normalize_phrase(raw: &str) -> String {
    raw.split_whitespace()
        .map(normalize_token)
        .filter(|t| !t.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Normalize a pre-tokenized word list, dropping tokens that normalize to
/// empty. Tokens containing interior whitespace are split.
pub fn normalize_words<S: AsRef<str>>(raw: &[S]) -> Vec<String> {
    raw.iter()
        .flat_map(|w| {
            w.as_ref()
                .split_whitespace()
                .map(normalize_token)
                .collect::<Vec<_>>()
        })
        .filter(|t| !t.is_empty())
        .collect()
}
