//! Flat key=value pipeline configuration.
//!
//! One `key = value` per line, full-line `#` comments. Unknown keys and
//! out-of-range values are errors, and validation reports every violation
//! at once rather than stopping at the first. Relative paths resolve
//! against the config file's directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use evcon_core::error::{Error, Result};
use evcon_core::eval_harness::EvalMode;
use evcon_core::linear_models::HingeKind;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    // input artifacts
    pub embeddings: Option<PathBuf>,
    pub tags: Option<PathBuf>,
    pub ngrams: Option<PathBuf>,
    pub visual_rep: Option<PathBuf>,
    pub events: Option<PathBuf>,
    pub stoplist: Option<PathBuf>,
    pub concept_images: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub eval_features: Option<PathBuf>,
    pub eval_labels: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    // stage parameters
    pub max_len: usize,
    pub smoothing: f64,
    pub min_score: f64,
    pub max_concepts: Option<usize>,
    pub k_neighbors: usize,
    pub k_clusters: usize,
    pub kmeans_batch_size: usize,
    pub kmeans_iterations: usize,
    pub neg_ratio: f64,
    pub cv_folds: usize,
    pub cv_grid: Vec<f64>,
    pub svm_c: f64,
    pub hinge: HingeKind,
    pub tol: f64,
    pub max_iter: usize,
    pub reps: usize,
    pub split: f64,
    pub mode: EvalMode,
    pub top_r: usize,
    pub vrep_default: Option<f64>,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            embeddings: None,
            tags: None,
            ngrams: None,
            visual_rep: None,
            events: None,
            stoplist: None,
            concept_images: None,
            features: None,
            eval_features: None,
            eval_labels: None,
            out_dir: None,
            max_len: 5,
            smoothing: 1.0,
            min_score: 0.0,
            max_concepts: None,
            k_neighbors: 20,
            k_clusters: 150,
            kmeans_batch_size: 256,
            kmeans_iterations: 100,
            neg_ratio: 10.0,
            cv_folds: 5,
            cv_grid: vec![0.01, 0.1, 1.0, 10.0, 100.0],
            svm_c: 1.0,
            hinge: HingeKind::Standard,
            tol: 1e-6,
            max_iter: 1000,
            reps: 5,
            split: 0.7,
            mode: EvalMode::OneShot,
            top_r: 5,
            vrep_default: None,
            seed: 0,
        }
    }
}

/// Path-valued keys, required for `run-all` (stoplist excepted).
const PATH_KEYS: &[&str] = &[
    "embeddings",
    "tags",
    "ngrams",
    "visual_rep",
    "events",
    "stoplist",
    "concept_images",
    "features",
    "eval_features",
    "eval_labels",
    "out_dir",
];

impl PipelineConfig {
    /// Parses and validates a config file, applying defaults for missing
    /// keys. Every violation is reported in one error.
    pub fn load(path: &Path) -> Result<PipelineConfig> {
        let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&body, base).map_err(|e| match e {
            Error::InvalidInput(msg) => {
                Error::InvalidInput(format!("{}: {msg}", path.display()))
            }
            other => other,
        })
    }

    /// Parses config text; relative paths resolve against `base`.
    pub fn parse(body: &str, base: &Path) -> Result<PipelineConfig> {
        let mut cfg = PipelineConfig::default();
        let mut problems: Vec<String> = Vec::new();
        let mut seen: BTreeMap<String, usize> = BTreeMap::new();

        for (idx, raw) in body.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                problems.push(format!("line {line_no}: expected \"key = value\""));
                continue;
            };
            let key = key.trim();
            let value = value.trim();
            if let Some(first) = seen.insert(key.to_string(), line_no) {
                problems.push(format!(
                    "line {line_no}: key {key:?} already set on line {first}"
                ));
                continue;
            }
            if let Err(msg) = cfg.apply(key, value, base) {
                problems.push(format!("line {line_no}: {msg}"));
            }
        }
        cfg.check_ranges(&mut problems);
        if problems.is_empty() {
            Ok(cfg)
        } else {
            Err(Error::InvalidInput(problems.join("\n")))
        }
    }

    fn apply(&mut self, key: &str, value: &str, base: &Path) -> std::result::Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
            value
                .parse()
                .map_err(|_| format!("bad value {value:?} for {key}"))
        }
        let path = |value: &str| -> PathBuf {
            let p = PathBuf::from(value);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };
        match key {
            "embeddings" => self.embeddings = Some(path(value)),
            "tags" => self.tags = Some(path(value)),
            "ngrams" => self.ngrams = Some(path(value)),
            "visual_rep" => self.visual_rep = Some(path(value)),
            "events" => self.events = Some(path(value)),
            "stoplist" => self.stoplist = Some(path(value)),
            "concept_images" => self.concept_images = Some(path(value)),
            "features" => self.features = Some(path(value)),
            "eval_features" => self.eval_features = Some(path(value)),
            "eval_labels" => self.eval_labels = Some(path(value)),
            "out_dir" => self.out_dir = Some(path(value)),
            "max_len" => self.max_len = num(key, value)?,
            "smoothing" => self.smoothing = num(key, value)?,
            "min_score" => self.min_score = num(key, value)?,
            "max_concepts" => {
                let n: usize = num(key, value)?;
                self.max_concepts = if n == 0 { None } else { Some(n) };
            }
            "k_neighbors" => self.k_neighbors = num(key, value)?,
            "k_clusters" => self.k_clusters = num(key, value)?,
            "kmeans_batch_size" => self.kmeans_batch_size = num(key, value)?,
            "kmeans_iterations" => self.kmeans_iterations = num(key, value)?,
            "neg_ratio" => self.neg_ratio = num(key, value)?,
            "cv_folds" => self.cv_folds = num(key, value)?,
            "cv_grid" => {
                let mut grid = Vec::new();
                for tok in value.split(',') {
                    grid.push(
                        tok.trim()
                            .parse::<f64>()
                            .map_err(|_| format!("bad cv_grid entry {tok:?}"))?,
                    );
                }
                self.cv_grid = grid;
            }
            "svm_c" => self.svm_c = num(key, value)?,
            "hinge" => {
                self.hinge = match value {
                    "standard" => HingeKind::Standard,
                    "squared" => HingeKind::Squared,
                    _ => return Err(format!("hinge must be standard or squared, got {value:?}")),
                }
            }
            "tol" => self.tol = num(key, value)?,
            "max_iter" => self.max_iter = num(key, value)?,
            "reps" => self.reps = num(key, value)?,
            "split" => self.split = num(key, value)?,
            "mode" => {
                self.mode = EvalMode::parse(value)
                    .ok_or_else(|| format!("mode must be one-shot or split, got {value:?}"))?
            }
            "top_r" => self.top_r = num(key, value)?,
            "vrep_default" => self.vrep_default = Some(num(key, value)?),
            "seed" => self.seed = num(key, value)?,
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    fn check_ranges(&self, problems: &mut Vec<String>) {
        if self.max_len == 0 {
            problems.push("max_len must be at least 1".into());
        }
        if !(self.smoothing > 0.0) {
            problems.push(format!("smoothing must be positive, got {}", self.smoothing));
        }
        if self.min_score < 0.0 {
            problems.push(format!("min_score must be nonnegative, got {}", self.min_score));
        }
        if self.k_neighbors == 0 {
            problems.push("k_neighbors must be at least 1".into());
        }
        if self.k_clusters == 0 {
            problems.push("k_clusters must be at least 1".into());
        }
        if self.kmeans_batch_size == 0 {
            problems.push("kmeans_batch_size must be at least 1".into());
        }
        if self.kmeans_iterations == 0 {
            problems.push("kmeans_iterations must be at least 1".into());
        }
        if !(self.neg_ratio > 0.0) {
            problems.push(format!("neg_ratio must be positive, got {}", self.neg_ratio));
        }
        if self.cv_folds < 2 {
            problems.push(format!("cv_folds must be at least 2, got {}", self.cv_folds));
        }
        if self.cv_grid.is_empty() || self.cv_grid.iter().any(|c| !(*c > 0.0)) {
            problems.push("cv_grid must be a nonempty list of positive values".into());
        }
        if !(self.svm_c > 0.0) {
            problems.push(format!("svm_c must be positive, got {}", self.svm_c));
        }
        if !(self.tol > 0.0) {
            problems.push(format!("tol must be positive, got {}", self.tol));
        }
        if self.max_iter == 0 {
            problems.push("max_iter must be at least 1".into());
        }
        if self.reps == 0 {
            problems.push("reps must be at least 1".into());
        }
        if !(self.split > 0.0 && self.split < 1.0) {
            problems.push(format!("split must be inside (0, 1), got {}", self.split));
        }
        if self.top_r == 0 {
            problems.push("top_r must be at least 1".into());
        }
        if let Some(v) = self.vrep_default {
            if !(0.0..=1.0).contains(&v) {
                problems.push(format!("vrep_default must be in [0, 1], got {v}"));
            }
        }
    }

    /// Returns the path for `key`, or an error naming the missing key.
    pub fn require(&self, key: &str) -> Result<&Path> {
        let slot = match key {
            "embeddings" => &self.embeddings,
            "tags" => &self.tags,
            "ngrams" => &self.ngrams,
            "visual_rep" => &self.visual_rep,
            "events" => &self.events,
            "stoplist" => &self.stoplist,
            "concept_images" => &self.concept_images,
            "features" => &self.features,
            "eval_features" => &self.eval_features,
            "eval_labels" => &self.eval_labels,
            "out_dir" => &self.out_dir,
            _ => return Err(Error::Internal(format!("unknown config key {key:?}"))),
        };
        slot.as_deref()
            .ok_or_else(|| Error::InvalidInput(format!("config is missing required path {key:?}")))
    }

    /// Problems that block a full `run-all`: missing required paths and
    /// inputs that do not exist. The stoplist is optional.
    pub fn run_all_problems(&self) -> Vec<String> {
        let mut problems = Vec::new();
        for key in PATH_KEYS {
            if *key == "stoplist" {
                continue;
            }
            match self.require(key) {
                Err(_) => problems.push(format!("missing required path {key:?}")),
                Ok(path) => {
                    if *key != "out_dir" && !path.exists() {
                        problems.push(format!("{key} path {} does not exist", path.display()));
                    }
                }
            }
        }
        if let Some(stop) = &self.stoplist {
            if !stop.exists() {
                problems.push(format!("stoplist path {} does not exist", stop.display()));
            }
        }
        problems
    }

    /// Renders the fully resolved configuration, defaults applied.
    pub fn render(&self) -> String {
        fn path_line(key: &str, v: &Option<PathBuf>) -> String {
            match v {
                Some(p) => format!("{key} = {}\n", p.display()),
                None => format!("# {key} = (unset)\n"),
            }
        }
        let mut out = String::new();
        out.push_str(&path_line("embeddings", &self.embeddings));
        out.push_str(&path_line("tags", &self.tags));
        out.push_str(&path_line("ngrams", &self.ngrams));
        out.push_str(&path_line("visual_rep", &self.visual_rep));
        out.push_str(&path_line("events", &self.events));
        out.push_str(&path_line("stoplist", &self.stoplist));
        out.push_str(&path_line("concept_images", &self.concept_images));
        out.push_str(&path_line("features", &self.features));
        out.push_str(&path_line("eval_features", &self.eval_features));
        out.push_str(&path_line("eval_labels", &self.eval_labels));
        out.push_str(&path_line("out_dir", &self.out_dir));
        out.push_str(&format!("max_len = {}\n", self.max_len));
        out.push_str(&format!("smoothing = {}\n", self.smoothing));
        out.push_str(&format!("min_score = {}\n", self.min_score));
        out.push_str(&format!(
            "max_concepts = {}\n",
            self.max_concepts.unwrap_or(0)
        ));
        out.push_str(&format!("k_neighbors = {}\n", self.k_neighbors));
        out.push_str(&format!("k_clusters = {}\n", self.k_clusters));
        out.push_str(&format!("kmeans_batch_size = {}\n", self.kmeans_batch_size));
        out.push_str(&format!("kmeans_iterations = {}\n", self.kmeans_iterations));
        out.push_str(&format!("neg_ratio = {}\n", self.neg_ratio));
        out.push_str(&format!("cv_folds = {}\n", self.cv_folds));
        let grid: Vec<String> = self.cv_grid.iter().map(|c| c.to_string()).collect();
        out.push_str(&format!("cv_grid = {}\n", grid.join(",")));
        out.push_str(&format!("svm_c = {}\n", self.svm_c));
        out.push_str(&format!(
            "hinge = {}\n",
            match self.hinge {
                HingeKind::Standard => "standard",
                HingeKind::Squared => "squared",
            }
        ));
        out.push_str(&format!("tol = {}\n", self.tol));
        out.push_str(&format!("max_iter = {}\n", self.max_iter));
        out.push_str(&format!("reps = {}\n", self.reps));
        out.push_str(&format!("split = {}\n", self.split));
        out.push_str(&format!("mode = {}\n", self.mode.as_str()));
        out.push_str(&format!("top_r = {}\n", self.top_r));
        if let Some(v) = self.vrep_default {
            out.push_str(&format!("vrep_default = {v}\n"));
        }
        out.push_str(&format!("seed = {}\n", self.seed));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_applies_defaults() {
        let cfg = PipelineConfig::parse("", Path::new(".")).unwrap();
        assert_eq!(cfg, PipelineConfig::default());
        assert_eq!(cfg.k_neighbors, 20);
        assert_eq!(cfg.k_clusters, 150);
        assert_eq!(cfg.cv_folds, 5);
        assert_eq!(cfg.reps, 5);
        // required paths flagged missing for a full run
        let problems = cfg.run_all_problems();
        assert!(problems.iter().any(|p| p.contains("embeddings")));
        assert!(problems.iter().any(|p| p.contains("out_dir")));
    }

    #[test]
    fn zero_k_clusters_is_range_error() {
        let err = PipelineConfig::parse("k_clusters = 0", Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("k_clusters"));
    }

    #[test]
    fn unknown_key_is_error() {
        let err = PipelineConfig::parse("k_cluters = 5", Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("unknown key"));
    }

    #[test]
    fn all_violations_reported_at_once() {
        let err =
            PipelineConfig::parse("k_clusters = 0\nsplit = 2\nbogus = 1", Path::new("."))
                .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("k_clusters"));
        assert!(msg.contains("split"));
        assert!(msg.contains("bogus"));
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let cfg = PipelineConfig::parse("# comment\n\nmax_len = 3\n", Path::new(".")).unwrap();
        assert_eq!(cfg.max_len, 3);
    }

    #[test]
    fn duplicate_key_is_error() {
        let err = PipelineConfig::parse("max_len = 3\nmax_len = 4", Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("already set"));
    }

    #[test]
    fn relative_paths_resolve_against_base() {
        let cfg = PipelineConfig::parse("tags = data/tags.jsonl", Path::new("/base")).unwrap();
        assert_eq!(cfg.tags.unwrap(), PathBuf::from("/base/data/tags.jsonl"));
    }

    #[test]
    fn grid_parses_and_zero_max_concepts_means_unlimited() {
        let cfg =
            PipelineConfig::parse("cv_grid = 0.5, 2, 8\nmax_concepts = 0", Path::new(".")).unwrap();
        assert_eq!(cfg.cv_grid, vec![0.5, 2.0, 8.0]);
        assert_eq!(cfg.max_concepts, None);
    }
}
