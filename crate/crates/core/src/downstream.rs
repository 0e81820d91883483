//! Importance-weighted learners: least squares and a linear SVM, both with an
//! appended constant feature as intercept, plus test metrics.
//!
//! The OLS intercept is unpenalized (there is no penalty at all); the SVM
//! penalizes it together with the other coefficients.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, require_positive, Error, Result};
use crate::linalg::lstsq_min_norm;
use crate::sample::SampleMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Regression,
    BinaryClassification,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightedModel {
    /// `d + 1` entries, intercept last.
    pub beta: Vec<f64>,
    pub task: Task,
}

impl WeightedModel {
    /// Raw scores `βᵀx̃`.
    pub fn decision(&self, x: &SampleMatrix) -> Result<Vec<f64>> {
        x.check_dim(self.beta.len() - 1)?;
        Ok(x.rows().map(|r| score(&self.beta, r)).collect())
    }

    /// Scores for regression, `±1` labels for classification (ties go to `+1`).
    pub fn predict(&self, x: &SampleMatrix) -> Result<Vec<f64>> {
        let s = self.decision(x)?;
        Ok(match self.task {
            Task::Regression => s,
            Task::BinaryClassification => s.into_iter().map(|v| if v >= 0.0 { 1.0 } else { -1.0 }).collect(),
        })
    }
}

fn score(beta: &[f64], row: &[f64]) -> f64 {
    let d = row.len();
    row.iter().zip(beta).map(|(x, b)| x * b).sum::<f64>() + beta[d]
}

fn check_weights(w: &[f64], n: usize) -> Result<()> {
    if w.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: w.len(),
        });
    }
    if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(invalid("weights", "must be finite and non-negative"));
    }
    if w.iter().all(|v| *v == 0.0) {
        return Err(invalid("weights", "all weights are zero"));
    }
    Ok(())
}

fn check_targets(y: &[f64], n: usize) -> Result<()> {
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: y.len(),
        });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(invalid("targets", "must be finite"));
    }
    Ok(())
}

/// Minimum-norm minimizer of `Σ w_i (βᵀx̃_i − y_i)²`.
pub fn weighted_ols(x: &SampleMatrix, y: &[f64], w: &[f64]) -> Result<WeightedModel> {
    let (n, d) = (x.nrows(), x.ncols());
    check_targets(y, n)?;
    check_weights(w, n)?;
    let root: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
    let a = Mat::from_fn(n, d + 1, |i, j| root[i] * if j < d { x.row(i)[j] } else { 1.0 });
    let b: Vec<f64> = y.iter().zip(&root).map(|(yi, r)| yi * r).collect();
    let beta = lstsq_min_norm(a.as_ref(), &b)?;
    Ok(WeightedModel {
        beta,
        task: Task::Regression,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SvmFit {
    pub model: WeightedModel,
    pub objective: f64,
    /// `(iteration, best objective so far)` at iterations 1, 2, 4, 8, … and the last.
    pub checkpoints: Vec<(usize, f64)>,
}

/// `‖β‖² + (C/n) Σ w_i (1 − y_i βᵀx̃_i)_+`.
pub fn svm_objective(x: &SampleMatrix, y: &[f64], w: &[f64], c: f64, beta: &[f64]) -> f64 {
    let n = x.nrows() as f64;
    let hinge: f64 = x
        .rows()
        .zip(y)
        .zip(w)
        .map(|((r, yi), wi)| wi * (1.0 - yi * score(beta, r)).max(0.0))
        .sum();
    beta.iter().map(|b| b * b).sum::<f64>() + c / n * hinge
}

/// Full-batch subgradient descent on [`svm_objective`] with step
/// `1 / (2·iteration)`, projected onto the ball `‖β‖² ≤ objective(0)` that
/// contains the minimizer. Deterministic; returns the best iterate.
pub fn weighted_linear_svm(x: &SampleMatrix, y: &[f64], w: &[f64], c: f64, epochs: usize) -> Result<SvmFit> {
    let (n, d) = (x.nrows(), x.ncols());
    check_targets(y, n)?;
    check_weights(w, n)?;
    require_positive("C", c)?;
    if epochs == 0 {
        return Err(invalid("epochs", "need at least one iteration"));
    }
    if y.iter().any(|v| *v != 1.0 && *v != -1.0) {
        return Err(invalid("labels", "must be -1 or +1"));
    }
    let scale = c / n as f64;
    let mut beta = vec![0.0; d + 1];
    let mut best = beta.clone();
    let mut best_obj = svm_objective(x, y, w, c, &beta);
    let radius = best_obj.sqrt();
    let mut checkpoints = Vec::new();
    let mut next_mark = 1;
    let mut grad = vec![0.0; d + 1];
    for it in 1..=epochs {
        for (g, b) in grad.iter_mut().zip(&beta) {
            *g = 2.0 * b;
        }
        for ((r, yi), wi) in x.rows().zip(y).zip(w) {
            if *wi > 0.0 && yi * score(&beta, r) < 1.0 {
                let f = scale * wi * yi;
                for (g, xv) in grad.iter_mut().zip(r) {
                    *g -= f * xv;
                }
                grad[d] -= f;
            }
        }
        let step = 1.0 / (2.0 * it as f64);
        for (b, g) in beta.iter_mut().zip(&grad) {
            *b -= step * g;
        }
        let len = beta.iter().map(|b| b * b).sum::<f64>().sqrt();
        if len > radius {
            let shrink = radius / len;
            beta.iter_mut().for_each(|b| *b *= shrink);
        }
        let obj = svm_objective(x, y, w, c, &beta);
        if obj < best_obj {
            best_obj = obj;
            best.copy_from_slice(&beta);
        }
        if it == next_mark || it == epochs {
            checkpoints.push((it, best_obj));
            next_mark *= 2;
        }
    }
    Ok(SvmFit {
        model: WeightedModel {
            beta: best,
            task: Task::BinaryClassification,
        },
        objective: best_obj,
        checkpoints,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Metrics {
    /// Mean squared difference between raw scores and targets.
    pub mse: f64,
    pub rmse: f64,
    /// `mse / Var(y)` (population variance); absent when `y` is constant.
    pub normalized_mse: Option<f64>,
    /// Classification only.
    pub zero_one_error: Option<f64>,
}

pub fn eval_metrics(model: &WeightedModel, x: &SampleMatrix, y: &[f64]) -> Result<Metrics> {
    if y.is_empty() {
        return Err(Error::Empty("test set".into()));
    }
    check_targets(y, x.nrows())?;
    let s = model.decision(x)?;
    let n = y.len() as f64;
    let mse = s.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let zero_one_error = match model.task {
        Task::Regression => None,
        Task::BinaryClassification => {
            let pred = model.predict(x)?;
            Some(pred.iter().zip(y).filter(|(p, t)| p != t).count() as f64 / n)
        }
    };
    Ok(Metrics {
        mse,
        rmse: mse.sqrt(),
        normalized_mse: (var > 0.0).then(|| mse / var),
        zero_one_error,
    })
}
