//! L2-regularized logistic regression (concept classifiers) and linear SVM
//! (event classifier), trained by a deterministic monotone solver, plus
//! stratified k-fold cross-validation for picking the regularization weight.
//!
//! Objectives (labels y in {-1, +1}, bias unregularized):
//!   logistic:      0.5*||w||^2 + C * sum ln(1 + exp(-y_i (w.x_i + b)))
//!   hinge:         0.5*||w||^2 + C * sum max(0, 1 - y_i (w.x_i + b))
//!   squared hinge: 0.5*||w||^2 + C * sum max(0, 1 - y_i (w.x_i + b))^2
//!
//! No feature scaling happens here; callers pass features as-is.

mod optimizer;

pub use optimizer::{minimize, Minimized};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest value predict_proba may return; keeps probabilities strictly
/// inside (0, 1) even for extreme margins.
const PROB_FLOOR: f64 = f64::MIN_POSITIVE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Logistic,
    Svm,
}

/// Hinge flavor for the SVM objective. Standard hinge uses the subgradient
/// convention d/dm max(0, 1-m) = 0 at m = 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HingeKind {
    #[default]
    Standard,
    Squared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub reg_c: f64,
    pub kind: ModelKind,
}

impl LinearModel {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.weights.len() {
            return Err(Error::InvalidInput(format!(
                "input has dimension {}, model expects {}",
                x.len(),
                self.weights.len()
            )));
        }
        Ok(())
    }

    /// Raw decision value w.x + b.
    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self
            .weights
            .iter()
            .zip(x)
            .map(|(w, xi)| w * xi)
            .sum::<f64>()
            + self.bias)
    }
}

/// Numerically stable ln(1 + exp(t)).
fn log1p_exp(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// Numerically stable logistic function.
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Loss selector for `objective`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Loss {
    Logistic,
    Hinge(HingeKind),
}

/// Objective value and gradient at `theta` = [w_1..w_d, b].
///
/// Exposed so gradient checks can compare the analytic gradient against
/// central finite differences without going through the trainer.
pub fn objective(loss: Loss, x: &[Vec<f64>], y: &[i8], c: f64, theta: &[f64]) -> (f64, Vec<f64>) {
    let d = theta.len() - 1;
    let (w, b) = (&theta[..d], theta[d]);
    let mut value = 0.5 * w.iter().map(|wi| wi * wi).sum::<f64>();
    let mut grad = vec![0.0; d + 1];
    grad[..d].copy_from_slice(w);

    for (xi, yi) in x.iter().zip(y) {
        let yi = f64::from(*yi);
        let margin = yi * (w.iter().zip(xi).map(|(a, b)| a * b).sum::<f64>() + b);
        match loss {
            Loss::Logistic => {
                value += c * log1p_exp(-margin);
                let coeff = -c * yi * sigmoid(-margin);
                for (g, xij) in grad[..d].iter_mut().zip(xi) {
                    *g += coeff * xij;
                }
                grad[d] += coeff;
            }
            Loss::Hinge(HingeKind::Standard) => {
                if margin < 1.0 {
                    value += c * (1.0 - margin);
                    for (g, xij) in grad[..d].iter_mut().zip(xi) {
                        *g += -c * yi * xij;
                    }
                    grad[d] += -c * yi;
                }
            }
            Loss::Hinge(HingeKind::Squared) => {
                if margin < 1.0 {
                    let slack = 1.0 - margin;
                    value += c * slack * slack;
                    let coeff = -2.0 * c * yi * slack;
                    for (g, xij) in grad[..d].iter_mut().zip(xi) {
                        *g += coeff * xij;
                    }
                    grad[d] += coeff;
                }
            }
        }
    }
    (value, grad)
}

fn validate_training_input(x: &[Vec<f64>], y: &[i8]) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!(
            "{} rows but {} labels",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::InvalidInput("need at least two training rows".into()));
    }
    let d = x[0].len();
    for (i, row) in x.iter().enumerate() {
        if row.len() != d {
            return Err(Error::InvalidInput(format!(
                "row {i} has dimension {}, expected {d}",
                row.len()
            )));
        }
        if !row.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput(format!("row {i} has a non-finite feature")));
        }
    }
    let mut pos = false;
    let mut neg = false;
    for label in y {
        match label {
            1 => pos = true,
            -1 => neg = true,
            other => {
                return Err(Error::InvalidInput(format!(
                    "labels must be -1 or +1, got {other}"
                )))
            }
        }
    }
    if !(pos && neg) {
        return Err(Error::InvalidInput(
            "training set must contain both classes".into(),
        ));
    }
    Ok(d)
}

fn train(loss: Loss, x: &[Vec<f64>], y: &[i8], c: f64, tol: f64, max_iter: usize) -> Result<LinearModel> {
    let d = validate_training_input(x, y)?;
    if !(c > 0.0) {
        return Err(Error::InvalidInput(format!("regularization C must be positive, got {c}")));
    }
    let theta0 = vec![0.0; d + 1];
    let result = minimize(|theta| objective(loss, x, y, c, theta), &theta0, tol, max_iter);
    debug_assert!(
        result.value <= result.trace[0],
        "objective rose above the zero-initialized value"
    );
    let mut weights = result.point;
    let bias = weights.pop().expect("theta holds d weights plus bias");
    Ok(LinearModel {
        weights,
        bias,
        reg_c: c,
        kind: match loss {
            Loss::Logistic => ModelKind::Logistic,
            Loss::Hinge(_) => ModelKind::Svm,
        },
    })
}

/// Trains an L2-regularized logistic regression classifier.
pub fn train_logistic(x: &[Vec<f64>], y: &[i8], c: f64, tol: f64, max_iter: usize) -> Result<LinearModel> {
    train(Loss::Logistic, x, y, c, tol, max_iter)
}

/// Trains an L2-regularized linear SVM.
pub fn train_linear_svm(
    x: &[Vec<f64>],
    y: &[i8],
    c: f64,
    hinge: HingeKind,
    tol: f64,
    max_iter: usize,
) -> Result<LinearModel> {
    train(Loss::Hinge(hinge), x, y, c, tol, max_iter)
}

/// Probabilistic score sigma(w.x + b), clamped strictly inside (0, 1).
pub fn predict_proba(model: &LinearModel, x: &[f64]) -> Result<f64> {
    if model.kind != ModelKind::Logistic {
        return Err(Error::InvalidInput(
            "predict_proba requires a logistic model".into(),
        ));
    }
    let z = model.decision(x)?;
    Ok(sigmoid(z).clamp(PROB_FLOOR, 1.0 - f64::EPSILON / 2.0))
}

/// Hard label sign(w.x + b); sign(0) is +1.
pub fn predict_label(model: &LinearModel, x: &[f64]) -> Result<i8> {
    let z = model.decision(x)?;
    Ok(if z >= 0.0 { 1 } else { -1 })
}

/// Cross-validation outcome over a regularization grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CVReport {
    /// Grid in ascending order.
    pub grid: Vec<f64>,
    /// fold_accuracies[i][f] = accuracy of grid[i] on held-out fold f.
    pub fold_accuracies: Vec<Vec<f64>>,
    pub best_c: f64,
    pub best_mean_accuracy: f64,
}

/// Stratified k-fold cross-validation for the logistic concept classifiers.
/// Ties on mean accuracy go to the smallest C. Deterministic under `seed`.
pub fn cross_validate(
    x: &[Vec<f64>],
    y: &[i8],
    grid: &[f64],
    folds: usize,
    seed: u64,
    tol: f64,
    max_iter: usize,
) -> Result<CVReport> {
    validate_training_input(x, y)?;
    if folds < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 folds, got {folds}")));
    }
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty regularization grid".into()));
    }
    let mut grid: Vec<f64> = grid.to_vec();
    grid.sort_by(|a, b| a.partial_cmp(b).expect("grid values must be finite"));
    grid.dedup();
    if grid.iter().any(|c| !(*c > 0.0)) {
        return Err(Error::InvalidInput("grid values must be positive".into()));
    }

    let fold_of = stratified_folds(y, folds, seed)?;

    let mut fold_accuracies = Vec::with_capacity(grid.len());
    for &c in &grid {
        let mut accs = Vec::with_capacity(folds);
        for fold in 0..folds {
            let mut train_x = Vec::new();
            let mut train_y = Vec::new();
            let mut test_idx = Vec::new();
            for (i, &f) in fold_of.iter().enumerate() {
                if f == fold {
                    test_idx.push(i);
                } else {
                    train_x.push(x[i].clone());
                    train_y.push(y[i]);
                }
            }
            let model = train_logistic(&train_x, &train_y, c, tol, max_iter)?;
            let correct = test_idx
                .iter()
                .filter(|&&i| predict_label(&model, &x[i]).expect("dims match") == y[i])
                .count();
            accs.push(correct as f64 / test_idx.len() as f64);
        }
        fold_accuracies.push(accs);
    }

    let mut best_c = grid[0];
    let mut best_mean = mean(&fold_accuracies[0]);
    for (i, &c) in grid.iter().enumerate().skip(1) {
        let m = mean(&fold_accuracies[i]);
        if m > best_mean {
            best_mean = m;
            best_c = c;
        }
    }
    Ok(CVReport {
        grid,
        fold_accuracies,
        best_c,
        best_mean_accuracy: best_mean,
    })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Assigns each sample to a fold, stratified by class: each class's indices
/// are shuffled with the seeded rng and dealt round-robin, so every fold
/// holds both classes.
fn stratified_folds(y: &[i8], folds: usize, seed: u64) -> Result<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0usize; y.len()];
    for class in [1i8, -1] {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        if idx.len() < folds {
            return Err(Error::InvalidInput(format!(
                "class {class:+} has {} samples, too few to stratify into {folds} folds",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        for (pos, i) in idx.into_iter().enumerate() {
            fold_of[i] = pos % folds;
        }
    }
    Ok(fold_of)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn symmetric_pair() -> (Vec<Vec<f64>>, Vec<i8>) {
        (vec![vec![-1.0], vec![1.0]], vec![-1, 1])
    }

    #[test]
    fn symmetric_data_forces_zero_bias_positive_weight() {
        let (x, y) = symmetric_pair();
        let m = train_logistic(&x, &y, 1.0, 1e-8, 500).unwrap();
        assert!(m.bias.abs() < 1e-6, "bias {}", m.bias);
        assert!(m.weights[0] > 0.0);
    }

    #[test]
    fn separable_blobs_reach_perfect_training_accuracy() {
        let x = vec![
            vec![0.0, 0.0],
            vec![0.2, -0.1],
            vec![-0.1, 0.1],
            vec![5.0, 5.0],
            vec![5.2, 4.9],
            vec![4.8, 5.1],
        ];
        let y = vec![-1, -1, -1, 1, 1, 1];
        for model in [
            train_logistic(&x, &y, 1.0, 1e-6, 1000).unwrap(),
            train_linear_svm(&x, &y, 1.0, HingeKind::Standard, 1e-6, 1000).unwrap(),
        ] {
            for (xi, yi) in x.iter().zip(&y) {
                assert_eq!(predict_label(&model, xi).unwrap(), *yi);
            }
        }
    }

    #[test]
    fn single_class_input_is_error() {
        let x = vec![vec![0.0], vec![1.0]];
        assert!(train_logistic(&x, &[1, 1], 1.0, 1e-6, 100).is_err());
    }

    #[test]
    fn non_finite_feature_is_error() {
        let x = vec![vec![f64::NAN], vec![1.0]];
        assert!(train_logistic(&x, &[-1, 1], 1.0, 1e-6, 100).is_err());
    }

    #[test]
    fn sigmoid_at_zero_model_is_half() {
        let m = LinearModel {
            weights: vec![0.0, 0.0],
            bias: 0.0,
            reg_c: 1.0,
            kind: ModelKind::Logistic,
        };
        assert_eq!(predict_proba(&m, &[3.0, -2.0]).unwrap(), 0.5);
    }

    #[test]
    fn negated_model_complements_probability() {
        let m = LinearModel {
            weights: vec![0.7, -1.3],
            bias: 0.4,
            reg_c: 1.0,
            kind: ModelKind::Logistic,
        };
        let neg = LinearModel {
            weights: m.weights.iter().map(|w| -w).collect(),
            bias: -m.bias,
            ..m.clone()
        };
        let x = [0.3, 2.0];
        let p = predict_proba(&m, &x).unwrap();
        let q = predict_proba(&neg, &x).unwrap();
        assert_relative_eq!(p + q, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn probability_strictly_monotone_in_margin() {
        let m = LinearModel {
            weights: vec![1.0],
            bias: 0.0,
            reg_c: 1.0,
            kind: ModelKind::Logistic,
        };
        let p_neg = predict_proba(&m, &[-2.0]).unwrap();
        let p_zero = predict_proba(&m, &[0.0]).unwrap();
        let p_pos = predict_proba(&m, &[2.0]).unwrap();
        assert!(p_neg < p_zero && p_zero < p_pos);
    }

    #[test]
    fn probability_stays_strictly_inside_unit_interval() {
        let m = LinearModel {
            weights: vec![1.0],
            bias: 0.0,
            reg_c: 1.0,
            kind: ModelKind::Logistic,
        };
        for x in [-1e6, -50.0, 0.0, 50.0, 1e6] {
            let p = predict_proba(&m, &[x]).unwrap();
            assert!(p > 0.0 && p < 1.0, "p({x}) = {p}");
        }
    }

    #[test]
    fn dimension_mismatch_is_error() {
        let m = LinearModel {
            weights: vec![1.0, 2.0],
            bias: 0.0,
            reg_c: 1.0,
            kind: ModelKind::Logistic,
        };
        assert!(predict_proba(&m, &[1.0]).is_err());
    }

    #[test]
    fn sign_zero_is_positive() {
        let m = LinearModel {
            weights: vec![1.0],
            bias: 0.0,
            reg_c: 1.0,
            kind: ModelKind::Svm,
        };
        assert_eq!(predict_label(&m, &[0.0]).unwrap(), 1);
        assert_eq!(predict_label(&m, &[-1e-9]).unwrap(), -1);
    }

    #[test]
    fn svm_decision_boundary_sits_at_origin_for_symmetric_pair() {
        let (x, y) = symmetric_pair();
        let m = train_linear_svm(&x, &y, 1.0, HingeKind::Standard, 1e-8, 500).unwrap();
        assert_eq!(predict_label(&m, &[1e-3]).unwrap(), 1);
        assert_eq!(predict_label(&m, &[-1e-3]).unwrap(), -1);
    }

    #[test]
    fn duplicated_rows_match_doubled_c_on_probes() {
        let x = vec![vec![0.1, 0.9], vec![0.4, 1.2], vec![2.1, -0.3], vec![2.4, 0.1]];
        let y = vec![-1, -1, 1, 1];
        let mut x_dup = x.clone();
        x_dup.extend(x.iter().cloned());
        let mut y_dup = y.clone();
        y_dup.extend(y.iter().copied());

        let doubled = train_linear_svm(&x, &y, 2.0, HingeKind::Standard, 1e-8, 2000).unwrap();
        let dup = train_linear_svm(&x_dup, &y_dup, 1.0, HingeKind::Standard, 1e-8, 2000).unwrap();
        for i in -4..=4 {
            for j in -4..=4 {
                let probe = [i as f64 * 0.7, j as f64 * 0.7];
                assert_eq!(
                    predict_label(&doubled, &probe).unwrap(),
                    predict_label(&dup, &probe).unwrap(),
                    "probe {probe:?}"
                );
            }
        }
    }

    #[test]
    fn label_flip_negates_decisions() {
        let x = vec![
            vec![0.0, 0.3],
            vec![0.5, -0.2],
            vec![3.0, 2.8],
            vec![3.3, 3.1],
        ];
        let y: Vec<i8> = vec![-1, -1, 1, 1];
        let flipped: Vec<i8> = y.iter().map(|l| -l).collect();
        let m = train_logistic(&x, &y, 1.0, 1e-9, 2000).unwrap();
        let mf = train_logistic(&x, &flipped, 1.0, 1e-9, 2000).unwrap();
        for i in -3..=3 {
            for j in -3..=3 {
                let probe = [i as f64, j as f64];
                let a = m.decision(&probe).unwrap();
                let b = mf.decision(&probe).unwrap();
                assert_relative_eq!(a, -b, max_relative = 1e-4, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn cv_single_value_grid_picks_it() {
        let (x, y) = blobs(12);
        let report = cross_validate(&x, &y, &[0.5], 3, 9, 1e-6, 500).unwrap();
        assert_eq!(report.best_c, 0.5);
    }

    #[test]
    fn cv_separable_data_hits_perfect_accuracy() {
        let (x, y) = blobs(20);
        let report = cross_validate(&x, &y, &[0.1, 1.0, 10.0], 5, 3, 1e-6, 500).unwrap();
        assert_eq!(report.best_mean_accuracy, 1.0);
    }

    #[test]
    fn cv_tie_goes_to_smallest_c() {
        // separable: every C achieves accuracy 1.0, so the tie rule decides
        let (x, y) = blobs(20);
        let report = cross_validate(&x, &y, &[1.0, 0.1], 5, 3, 1e-6, 500).unwrap();
        assert_eq!(report.best_c, 0.1);
    }

    #[test]
    fn cv_class_too_small_to_stratify_is_error() {
        let x = vec![vec![0.0], vec![0.1], vec![5.0], vec![5.1], vec![5.2]];
        let y = vec![-1, -1, 1, 1, 1];
        assert!(cross_validate(&x, &y, &[1.0], 3, 0, 1e-6, 100).is_err());
    }

    #[test]
    fn cv_deterministic_under_seed() {
        let (x, y) = blobs(16);
        let a = cross_validate(&x, &y, &[0.1, 1.0], 4, 77, 1e-6, 300).unwrap();
        let b = cross_validate(&x, &y, &[0.1, 1.0], 4, 77, 1e-6, 300).unwrap();
        assert_eq!(a, b);
    }

    fn blobs(n_per_class: usize) -> (Vec<Vec<f64>>, Vec<i8>) {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..n_per_class {
            let t = i as f64 * 0.01;
            x.push(vec![t, -t]);
            y.push(-1);
            x.push(vec![4.0 + t, 4.0 - t]);
            y.push(1);
        }
        (x, y)
    }
}
