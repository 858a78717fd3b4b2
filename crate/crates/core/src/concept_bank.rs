//! The concept bank: one logistic classifier per pooled concept, trained
//! from its manifest, plus scoring that turns any feature vector into the
//! m-dimensional concept-score representation.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::concept_clustering::TrainingManifest;
use crate::concept_discovery::ConceptPool;
use crate::corpus_io::FeatureMatrix;
use crate::error::{Error, Result};
use crate::linear_models::{
    cross_validate, predict_proba, train_logistic, CVReport, LinearModel, ModelKind,
};
use crate::seeding::derive_seed;

/// Training knobs for the bank.
#[derive(Debug, Clone, PartialEq)]
pub struct BankConfig {
    pub cv_grid: Vec<f64>,
    pub cv_folds: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for BankConfig {
    fn default() -> Self {
        BankConfig {
            cv_grid: vec![0.01, 0.1, 1.0, 10.0, 100.0],
            cv_folds: 5,
            tol: 1e-6,
            max_iter: 1000,
            seed: 0,
        }
    }
}

/// Ordered collection of trained concept classifiers. Concept order equals
/// pool order and defines the layout of every score vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptBank {
    pub concepts: Vec<String>,
    pub models: Vec<LinearModel>,
    pub feature_dim: usize,
    /// Per-concept cross-validation outcome; recorded, never gated.
    pub metadata: Vec<CVReport>,
}

impl ConceptBank {
    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    fn validate(&self) -> Result<()> {
        if self.concepts.len() != self.models.len() || self.concepts.len() != self.metadata.len() {
            return Err(Error::Internal(
                "bank concept/model/metadata lengths disagree".into(),
            ));
        }
        for (concept, model) in self.concepts.iter().zip(&self.models) {
            if model.dim() != self.feature_dim {
                return Err(Error::Internal(format!(
                    "model for {concept:?} has dimension {}, bank has {}",
                    model.dim(),
                    self.feature_dim
                )));
            }
            if model.kind != ModelKind::Logistic {
                return Err(Error::Internal(format!(
                    "model for {concept:?} is not logistic"
                )));
            }
        }
        Ok(())
    }
}

/// Concept scores for one image, in bank order.
#[derive(Debug, Clone, PartialEq)]
pub struct ConceptScoreVector {
    pub image_id: String,
    pub scores: Vec<f64>,
}

/// Trains the bank: for each pooled concept, pick C by cross-validation on
/// its manifest, retrain on the full manifest with the winner, keep the CV
/// report as metadata. Concepts train in parallel; results are in pool
/// order and bit-identical regardless of scheduling.
pub fn train_bank(
    pool: &ConceptPool,
    manifests: &HashMap<String, TrainingManifest>,
    features: &FeatureMatrix,
    config: &BankConfig,
) -> Result<ConceptBank> {
    let concepts: Vec<String> = pool.phrases().map(str::to_string).collect();
    train_bank_ordered(&concepts, manifests, features, config)
}

/// Same as [`train_bank`], but from an explicit concept ordering (as read
/// from a pool file) instead of a full pool.
pub fn train_bank_ordered(
    concepts: &[String],
    manifests: &HashMap<String, TrainingManifest>,
    features: &FeatureMatrix,
    config: &BankConfig,
) -> Result<ConceptBank> {
    let concepts: Vec<String> = concepts.to_vec();
    for concept in &concepts {
        let m = manifests.get(concept).ok_or_else(|| {
            Error::InvalidInput(format!("no training manifest for concept {concept:?}"))
        })?;
        if m.positives.is_empty() || m.negatives.is_empty() {
            return Err(Error::InvalidInput(format!(
                "concept {concept:?} has an empty positive or negative set"
            )));
        }
    }

    let trained: Result<Vec<(LinearModel, CVReport)>> = concepts
        .par_iter()
        .enumerate()
        .map(|(i, concept)| {
            let manifest = &manifests[concept];
            let (x, y) = assemble(manifest, features)?;
            let seed = derive_seed(config.seed, "bank-cv", &[i as u64]);
            let report = cross_validate(
                &x,
                &y,
                &config.cv_grid,
                config.cv_folds,
                seed,
                config.tol,
                config.max_iter,
            )
            .map_err(|e| Error::InvalidInput(format!("concept {concept:?}: {e}")))?;
            let model = train_logistic(&x, &y, report.best_c, config.tol, config.max_iter)?;
            Ok((model, report))
        })
        .collect();
    let trained = trained?;

    let (models, metadata): (Vec<LinearModel>, Vec<CVReport>) = trained.into_iter().unzip();
    let bank = ConceptBank {
        concepts,
        models,
        feature_dim: features.dim(),
        metadata,
    };
    bank.validate()?;
    Ok(bank)
}

fn assemble(manifest: &TrainingManifest, features: &FeatureMatrix) -> Result<(Vec<Vec<f64>>, Vec<i8>)> {
    let mut x = Vec::with_capacity(manifest.positives.len() + manifest.negatives.len());
    let mut y = Vec::with_capacity(x.capacity());
    let mut missing = Vec::new();
    for (ids, label) in [(&manifest.positives, 1i8), (&manifest.negatives, -1i8)] {
        for id in ids {
            match features.get(id) {
                Some(row) => {
                    x.push(row.to_vec());
                    y.push(label);
                }
                None => missing.push(id.clone()),
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::Resolution(format!(
            "manifest for {:?} references {} image(s) missing from the feature matrix: {}",
            manifest.concept,
            missing.len(),
            missing.join(", ")
        )));
    }
    Ok((x, y))
}

/// Scores one feature vector against every classifier in bank order.
pub fn score_image(bank: &ConceptBank, image_id: &str, x: &[f64]) -> Result<ConceptScoreVector> {
    if x.len() != bank.feature_dim {
        return Err(Error::InvalidInput(format!(
            "feature vector has dimension {}, bank expects {}",
            x.len(),
            bank.feature_dim
        )));
    }
    let mut scores = Vec::with_capacity(bank.models.len());
    for model in &bank.models {
        scores.push(predict_proba(model, x)?);
    }
    Ok(ConceptScoreVector {
        image_id: image_id.to_string(),
        scores,
    })
}

/// Scores a whole matrix; rows score in parallel and come back in input
/// order, each identical to an independent `score_image` call.
pub fn score_matrix(bank: &ConceptBank, features: &FeatureMatrix) -> Result<Vec<ConceptScoreVector>> {
    let rows: Vec<(&str, &[f64])> = features.iter().collect();
    rows.par_iter()
        .map(|(id, row)| score_image(bank, id, row))
        .collect()
}

/// Converts score vectors into a FeatureMatrix (dimension m, bank order),
/// reusing the feature-file format for persistence.
pub fn scores_to_matrix(bank: &ConceptBank, scored: &[ConceptScoreVector]) -> Result<FeatureMatrix> {
    let mut matrix = FeatureMatrix::new(bank.len());
    for s in scored {
        matrix.push(s.image_id.clone(), s.scores.clone())?;
    }
    Ok(matrix)
}

/// Counts, per concept, on how many images it lands in the top `r` scores
/// (ties by bank order), returning the `n` most frequent.
pub fn top_concepts(
    bank: &ConceptBank,
    scored: &[ConceptScoreVector],
    r: usize,
    n: usize,
) -> Result<Vec<(String, u64)>> {
    if r == 0 || n == 0 {
        return Err(Error::InvalidInput("r and n must be at least 1".into()));
    }
    let m = bank.len();
    let mut counts = vec![0u64; m];
    for s in scored {
        if s.scores.len() != m {
            return Err(Error::InvalidInput(format!(
                "score vector for {:?} has {} entries, bank has {m}",
                s.image_id,
                s.scores.len()
            )));
        }
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| {
            s.scores[b]
                .partial_cmp(&s.scores[a])
                .expect("scores are finite")
                .then(a.cmp(&b))
        });
        for &i in order.iter().take(r.min(m)) {
            counts[i] += 1;
        }
    }
    let mut ranked: Vec<usize> = (0..m).collect();
    ranked.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
    Ok(ranked
        .into_iter()
        .take(n)
        .map(|i| (bank.concepts[i].clone(), counts[i]))
        .collect())
}
