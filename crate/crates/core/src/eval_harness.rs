//! Few-shot evaluation protocols over any feature representation.
//!
//! One-shot: per class and repetition, train a binary linear SVM on one
//! positive and one negative feature, test on all remaining positives plus
//! an equal-count sample of negatives, so chance is 0.5. Split: per class,
//! a one-vs-rest task with balanced negatives and a stratified train/test
//! split. Per-class accuracy averages repetitions; overall accuracy is the
//! unweighted (macro) mean over classes.
//!
//! Every sample derives from (master seed, class index, repetition index),
//! which makes reports bit-identical across runs and schedulings, and makes
//! comparisons across representations paired.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::corpus_io::{open_lines, write_atomic, FeatureMatrix};
use crate::error::{Error, Result};
use crate::linear_models::{predict_label, train_linear_svm, HingeKind, LinearModel};
use crate::seeding::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    OneShot,
    Split,
}

impl EvalMode {
    pub fn as_str(self) -> &'static str {
        match self {
            EvalMode::OneShot => "one-shot",
            EvalMode::Split => "split",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "one-shot" => Some(EvalMode::OneShot),
            "split" => Some(EvalMode::Split),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub mode: EvalMode,
    pub repetitions: usize,
    pub split_fraction: f64,
    pub seed: u64,
    /// Event-classifier SVM settings, fixed across all experiments.
    pub svm_c: f64,
    pub hinge: HingeKind,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            mode: EvalMode::OneShot,
            repetitions: 5,
            split_fraction: 0.7,
            seed: 0,
            svm_c: 1.0,
            hinge: HingeKind::Standard,
            tol: 1e-6,
            max_iter: 1000,
        }
    }
}

impl EvalConfig {
    fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::InvalidInput("repetitions must be at least 1".into()));
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(Error::InvalidInput(format!(
                "split fraction {} outside (0, 1)",
                self.split_fraction
            )));
        }
        Ok(())
    }
}

/// Labeled features ready for evaluation: every image carries exactly one
/// class; classes are ordered lexicographically.
#[derive(Debug, Clone)]
pub struct LabeledFeatureSet {
    features: FeatureMatrix,
    classes: Vec<String>,
    /// members[c] = row indices of class c, in file order.
    members: Vec<Vec<usize>>,
}

impl LabeledFeatureSet {
    pub fn new(features: FeatureMatrix) -> Result<Self> {
        let labels = features
            .labels()
            .ok_or_else(|| Error::InvalidInput("feature matrix has no labels".into()))?;
        let mut unlabeled = Vec::new();
        for id in features.ids() {
            if !labels.contains_key(id) {
                unlabeled.push(id.clone());
            }
        }
        if !unlabeled.is_empty() {
            return Err(Error::InvalidInput(format!(
                "{} image(s) have no label: {}",
                unlabeled.len(),
                unlabeled.join(", ")
            )));
        }
        let mut classes: Vec<String> = labels.values().cloned().collect();
        classes.sort();
        classes.dedup();
        if classes.len() < 2 {
            return Err(Error::InvalidInput(
                "need at least two classes to evaluate".into(),
            ));
        }
        let class_index: HashMap<&str, usize> = classes
            .iter()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i))
            .collect();
        let mut members = vec![Vec::new(); classes.len()];
        for (row, id) in features.ids().iter().enumerate() {
            let class = &labels[id];
            members[class_index[class.as_str()]].push(row);
        }
        Ok(LabeledFeatureSet {
            features,
            classes,
            members,
        })
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn features(&self) -> &FeatureMatrix {
        &self.features
    }

    fn row(&self, idx: usize) -> &[f64] {
        let id = &self.features.ids()[idx];
        self.features.get(id).expect("index built from ids")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepetitionDetail {
    pub accuracy: f64,
    pub test_size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassResult {
    pub class: String,
    pub accuracy: f64,
    pub repetitions: Vec<RepetitionDetail>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub representation: String,
    pub mode: EvalMode,
    pub repetitions: usize,
    pub split_fraction: f64,
    pub seed: u64,
    pub classes: Vec<ClassResult>,
    pub overall_accuracy: f64,
}

impl EvalReport {
    pub fn per_class_accuracy(&self) -> impl Iterator<Item = (&str, f64)> {
        self.classes.iter().map(|c| (c.class.as_str(), c.accuracy))
    }
}

fn finish_report(
    representation: &str,
    config: &EvalConfig,
    classes: Vec<ClassResult>,
) -> EvalReport {
    let overall =
        classes.iter().map(|c| c.accuracy).sum::<f64>() / classes.len() as f64;
    EvalReport {
        representation: representation.to_string(),
        mode: config.mode,
        repetitions: config.repetitions,
        split_fraction: config.split_fraction,
        seed: config.seed,
        classes,
        overall_accuracy: overall,
    }
}

/// Sample `take` distinct elements from `pool` by partial Fisher-Yates.
fn sample_without_replacement(pool: &mut [usize], take: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    debug_assert!(take <= pool.len());
    for i in 0..take {
        let j = rng.gen_range(i..pool.len());
        pool.swap(i, j);
    }
    pool[..take].to_vec()
}

fn accuracy_on(
    data: &LabeledFeatureSet,
    model: &LinearModel,
    positives: &[usize],
    negatives: &[usize],
) -> Result<f64> {
    let mut correct = 0usize;
    for &i in positives {
        if predict_label(model, data.row(i))? == 1 {
            correct += 1;
        }
    }
    for &i in negatives {
        if predict_label(model, data.row(i))? == -1 {
            correct += 1;
        }
    }
    Ok(correct as f64 / (positives.len() + negatives.len()) as f64)
}

/// One-shot protocol: a single positive and negative training feature per
/// repetition, balanced test set from the remainder.
pub fn one_shot_eval(
    data: &LabeledFeatureSet,
    config: &EvalConfig,
    representation: &str,
) -> Result<EvalReport> {
    config.validate()?;
    let class_results: Result<Vec<ClassResult>> = data
        .classes
        .par_iter()
        .enumerate()
        .map(|(ci, class)| {
            let positives = &data.members[ci];
            if positives.len() < 2 {
                return Err(Error::InvalidInput(format!(
                    "class {class:?} has {} image(s), one-shot needs at least 2",
                    positives.len()
                )));
            }
            let others: Vec<usize> = (0..data.features.len())
                .filter(|i| !positives.contains(i))
                .collect();
            if others.is_empty() {
                return Err(Error::InvalidInput(format!(
                    "no negatives available for class {class:?}"
                )));
            }
            let mut reps = Vec::with_capacity(config.repetitions);
            for rep in 0..config.repetitions {
                let seed = derive_seed(config.seed, "one-shot", &[ci as u64, rep as u64]);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let train_pos = positives[rng.gen_range(0..positives.len())];
                let train_neg = others[rng.gen_range(0..others.len())];

                let test_pos: Vec<usize> = positives
                    .iter()
                    .copied()
                    .filter(|&i| i != train_pos)
                    .collect();
                let mut neg_pool: Vec<usize> = others
                    .iter()
                    .copied()
                    .filter(|&i| i != train_neg)
                    .collect();
                if neg_pool.len() < test_pos.len() {
                    return Err(Error::InvalidInput(format!(
                        "class {class:?}: {} negatives available, need {} for a balanced test set",
                        neg_pool.len(),
                        test_pos.len()
                    )));
                }
                let test_neg = sample_without_replacement(&mut neg_pool, test_pos.len(), &mut rng);

                // no-leakage and balance checks, per repetition
                if test_pos.contains(&train_pos) || test_neg.contains(&train_neg) {
                    return Err(Error::Internal("training feature leaked into test set".into()));
                }
                if test_pos.len() != test_neg.len() {
                    return Err(Error::Internal("unbalanced one-shot test set".into()));
                }

                let x = vec![data.row(train_pos).to_vec(), data.row(train_neg).to_vec()];
                let y = vec![1i8, -1];
                let model =
                    train_linear_svm(&x, &y, config.svm_c, config.hinge, config.tol, config.max_iter)?;
                let accuracy = accuracy_on(data, &model, &test_pos, &test_neg)?;
                reps.push(RepetitionDetail {
                    accuracy,
                    test_size: test_pos.len() + test_neg.len(),
                });
            }
            let mean = reps.iter().map(|r| r.accuracy).sum::<f64>() / reps.len() as f64;
            Ok(ClassResult {
                class: class.clone(),
                accuracy: mean,
                repetitions: reps,
            })
        })
        .collect();
    Ok(finish_report(representation, config, class_results?))
}

/// Split protocol: per class, a one-vs-rest task with balanced negatives and
/// a stratified split at `split_fraction`.
pub fn split_eval(
    data: &LabeledFeatureSet,
    config: &EvalConfig,
    representation: &str,
) -> Result<EvalReport> {
    config.validate()?;
    let class_results: Result<Vec<ClassResult>> = data
        .classes
        .par_iter()
        .enumerate()
        .map(|(ci, class)| {
            let positives = &data.members[ci];
            let n = positives.len();
            let train_count = (config.split_fraction * n as f64).floor() as usize;
            if n < 2 || train_count == 0 || train_count >= n {
                return Err(Error::InvalidInput(format!(
                    "class {class:?} has {n} image(s), too few for a {:.0}/{:.0} split",
                    config.split_fraction * 100.0,
                    (1.0 - config.split_fraction) * 100.0
                )));
            }
            let others: Vec<usize> = (0..data.features.len())
                .filter(|i| !positives.contains(i))
                .collect();
            if others.len() < n {
                return Err(Error::InvalidInput(format!(
                    "class {class:?}: {} negatives available, need {n} balanced negatives",
                    others.len()
                )));
            }
            let mut reps = Vec::with_capacity(config.repetitions);
            for rep in 0..config.repetitions {
                let seed = derive_seed(config.seed, "split", &[ci as u64, rep as u64]);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut neg_pool = others.clone();
                let negatives = sample_without_replacement(&mut neg_pool, n, &mut rng);

                let mut pos = positives.clone();
                let train_pos = sample_without_replacement(&mut pos, train_count, &mut rng);
                let test_pos: Vec<usize> = pos[train_count..].to_vec();
                let mut neg = negatives.clone();
                let train_neg = sample_without_replacement(&mut neg, train_count, &mut rng);
                let test_neg: Vec<usize> = neg[train_count..].to_vec();

                if train_pos.iter().any(|i| test_pos.contains(i))
                    || train_neg.iter().any(|i| test_neg.contains(i))
                {
                    return Err(Error::Internal("training rows leaked into test set".into()));
                }

                let mut x = Vec::with_capacity(2 * train_count);
                let mut y = Vec::with_capacity(2 * train_count);
                for &i in &train_pos {
                    x.push(data.row(i).to_vec());
                    y.push(1i8);
                }
                for &i in &train_neg {
                    x.push(data.row(i).to_vec());
                    y.push(-1i8);
                }
                let model =
                    train_linear_svm(&x, &y, config.svm_c, config.hinge, config.tol, config.max_iter)?;
                let accuracy = accuracy_on(data, &model, &test_pos, &test_neg)?;
                reps.push(RepetitionDetail {
                    accuracy,
                    test_size: test_pos.len() + test_neg.len(),
                });
            }
            let mean = reps.iter().map(|r| r.accuracy).sum::<f64>() / reps.len() as f64;
            Ok(ClassResult {
                class: class.clone(),
                accuracy: mean,
                repetitions: reps,
            })
        })
        .collect();
    Ok(finish_report(representation, config, class_results?))
}

/// Dispatch on the configured mode.
pub fn evaluate(
    data: &LabeledFeatureSet,
    config: &EvalConfig,
    representation: &str,
) -> Result<EvalReport> {
    match config.mode {
        EvalMode::OneShot => one_shot_eval(data, config, representation),
        EvalMode::Split => split_eval(data, config, representation),
    }
}

/// Evaluates several named representations under the same labels and the
/// same seeds, so the comparison is paired sample-for-sample.
pub fn compare_representations(
    labels: &HashMap<String, String>,
    representations: &[(String, FeatureMatrix)],
    config: &EvalConfig,
) -> Result<Vec<EvalReport>> {
    if representations.is_empty() {
        return Err(Error::InvalidInput("no representations to compare".into()));
    }
    let mut reference: Vec<&String> = representations[0].1.ids().iter().collect();
    reference.sort();
    for (name, matrix) in representations.iter().skip(1) {
        let mut ids: Vec<&String> = matrix.ids().iter().collect();
        ids.sort();
        if ids != reference {
            return Err(Error::Resolution(format!(
                "representation {name:?} covers a different image set than {:?}",
                representations[0].0
            )));
        }
    }
    let mut reports = Vec::with_capacity(representations.len());
    for (name, matrix) in representations {
        let mut matrix = matrix.clone();
        matrix.set_labels(labels.clone())?;
        let data = LabeledFeatureSet::new(matrix)?;
        reports.push(evaluate(&data, config, name)?);
    }
    Ok(reports)
}

// ---------------------------------------------------------------------------
// report persistence: line-delimited records plus an aligned table
// ---------------------------------------------------------------------------

const REPORT_VERSION: &str = "v1";

/// Serializes reports as line-delimited records. Several reports concatenate
/// into one comparison file.
pub fn render_report_records(reports: &[EvalReport]) -> String {
    let mut out = String::new();
    for r in reports {
        let _ = writeln!(out, "report\t{REPORT_VERSION}");
        let _ = writeln!(out, "repr\t{}", r.representation);
        let _ = writeln!(
            out,
            "config\tmode={}\treps={}\tsplit={}\tseed={}",
            r.mode.as_str(),
            r.repetitions,
            r.split_fraction,
            r.seed
        );
        for c in &r.classes {
            let _ = writeln!(out, "class\t{}\t{}", c.class, c.accuracy);
            for (i, rep) in c.repetitions.iter().enumerate() {
                let _ = writeln!(out, "rep\t{}\t{i}\t{}\t{}", c.class, rep.accuracy, rep.test_size);
            }
        }
        let _ = writeln!(out, "overall\t{}", r.overall_accuracy);
    }
    out
}

pub fn save_reports(reports: &[EvalReport], path: &Path) -> Result<()> {
    write_atomic(path, &render_report_records(reports))
}

/// Loads every report block from a records file.
pub fn load_reports(path: &Path) -> Result<Vec<EvalReport>> {
    struct Builder {
        representation: Option<String>,
        mode: Option<EvalMode>,
        repetitions: usize,
        split_fraction: f64,
        seed: u64,
        classes: Vec<ClassResult>,
        overall: Option<f64>,
    }
    impl Builder {
        fn new() -> Self {
            Builder {
                representation: None,
                mode: None,
                repetitions: 0,
                split_fraction: 0.0,
                seed: 0,
                classes: Vec::new(),
                overall: None,
            }
        }
        fn finish(self, path: &Path) -> Result<EvalReport> {
            Ok(EvalReport {
                representation: self.representation.unwrap_or_default(),
                mode: self.mode.ok_or_else(|| {
                    Error::InvalidInput(format!("{}: report block missing config", path.display()))
                })?,
                repetitions: self.repetitions,
                split_fraction: self.split_fraction,
                seed: self.seed,
                classes: self.classes,
                overall_accuracy: self.overall.ok_or_else(|| {
                    Error::InvalidInput(format!("{}: report block missing overall", path.display()))
                })?,
            })
        }
    }

    let mut reports = Vec::new();
    let mut current: Option<Builder> = None;
    for (idx, line) in open_lines(path)?.enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let bad = |msg: &str| Error::malformed(path, line_no, msg.to_string());
        match fields[0] {
            "report" => {
                if fields.get(1) != Some(&REPORT_VERSION) {
                    return Err(Error::VersionMismatch {
                        what: "report".into(),
                        found: 0,
                        expected: 1,
                    });
                }
                if let Some(b) = current.take() {
                    reports.push(b.finish(path)?);
                }
                current = Some(Builder::new());
            }
            "repr" => {
                let b = current.as_mut().ok_or_else(|| bad("repr before report"))?;
                b.representation = Some(fields.get(1).unwrap_or(&"").to_string());
            }
            "config" => {
                let b = current.as_mut().ok_or_else(|| bad("config before report"))?;
                for field in &fields[1..] {
                    let (key, value) = field
                        .split_once('=')
                        .ok_or_else(|| bad("config field without '='"))?;
                    match key {
                        "mode" => {
                            b.mode = Some(
                                EvalMode::parse(value)
                                    .ok_or_else(|| bad(&format!("unknown mode {value:?}")))?,
                            )
                        }
                        "reps" => {
                            b.repetitions =
                                value.parse().map_err(|_| bad("bad reps value"))?
                        }
                        "split" => {
                            b.split_fraction =
                                value.parse().map_err(|_| bad("bad split value"))?
                        }
                        "seed" => b.seed = value.parse().map_err(|_| bad("bad seed value"))?,
                        _ => return Err(bad(&format!("unknown config key {key:?}"))),
                    }
                }
            }
            "class" => {
                let b = current.as_mut().ok_or_else(|| bad("class before report"))?;
                if fields.len() != 3 {
                    return Err(bad("class line needs name and accuracy"));
                }
                b.classes.push(ClassResult {
                    class: fields[1].to_string(),
                    accuracy: fields[2].parse().map_err(|_| bad("bad accuracy"))?,
                    repetitions: Vec::new(),
                });
            }
            "rep" => {
                let b = current.as_mut().ok_or_else(|| bad("rep before report"))?;
                if fields.len() != 5 {
                    return Err(bad("rep line needs class, index, accuracy, test size"));
                }
                let class = fields[1];
                let detail = RepetitionDetail {
                    accuracy: fields[3].parse().map_err(|_| bad("bad accuracy"))?,
                    test_size: fields[4].parse().map_err(|_| bad("bad test size"))?,
                };
                let target = b
                    .classes
                    .iter_mut()
                    .rev()
                    .find(|c| c.class == class)
                    .ok_or_else(|| bad("rep line before its class line"))?;
                target.repetitions.push(detail);
            }
            "overall" => {
                let b = current.as_mut().ok_or_else(|| bad("overall before report"))?;
                b.overall = Some(fields[1].parse().map_err(|_| bad("bad overall"))?);
            }
            other => return Err(bad(&format!("unknown record kind {other:?}"))),
        }
    }
    if let Some(b) = current.take() {
        reports.push(b.finish(path)?);
    }
    if reports.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{}: no report records",
            path.display()
        )));
    }
    Ok(reports)
}

/// Human-readable aligned table: one row per class, one column per report.
pub fn render_table(reports: &[EvalReport]) -> String {
    let mut out = String::new();
    if reports.is_empty() {
        return out;
    }
    let classes: Vec<&str> = reports[0].classes.iter().map(|c| c.class.as_str()).collect();
    let name_width = classes
        .iter()
        .map(|c| c.len())
        .chain(["class".len(), "overall".len()])
        .max()
        .unwrap_or(8);
    let col_width = reports
        .iter()
        .map(|r| r.representation.len().max(8))
        .max()
        .unwrap_or(8);

    let _ = write!(out, "{:<name_width$}", "class");
    for r in reports {
        let _ = write!(out, "  {:>col_width$}", r.representation);
    }
    out.push('\n');
    for (i, class) in classes.iter().enumerate() {
        let _ = write!(out, "{class:<name_width$}");
        for r in reports {
            let _ = write!(out, "  {:>col_width$.4}", r.classes[i].accuracy);
        }
        out.push('\n');
    }
    let _ = write!(out, "{:<name_width$}", "overall");
    for r in reports {
        let _ = write!(out, "  {:>col_width$.4}", r.overall_accuracy);
    }
    out.push('\n');
    out
}
