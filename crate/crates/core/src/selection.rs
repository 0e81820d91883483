//! Unsupervised model selection: the moment-matching score `J`, random
//! validation-function families, k-fold cross-validation and oracle selection.
//!
//! For any test function `u`, `E_q[u] = E_p[u · q/p]`. A good ratio estimate
//! `f` therefore satisfies `(1/n) Σ u(x_i) f(x_i) ≈ (1/m) Σ u(x'_j)`, and `J`
//! averages the squared gap over a family `u_1 … u_F`.

use faer::{Mat, MatRef};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::estimators::RatioEstimator;
use crate::kernel::{gaussian_kernel_matrix, KernelSpec};
use crate::linalg::mat_t_vec;
use crate::rng::{permutation, stage_rng};
use crate::sample::SampleMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationFamily {
    /// `u(x) = βᵀx`, `β ~ N(0, I)`
    Linear,
    /// `u(x) = 1[βᵀx > 0]`
    Halfspace,
    /// `u(x) = Σ_i γ_i k(a_i, x)`, `γ ~ N(0, I)`
    KernelCombo,
    /// `u(x) = 1[Σ_i γ_i k(a_i, x) > 0]`
    KernelIndicator,
    /// `u_j(x) = x_j`
    Coordinate,
}

impl ValidationFamily {
    pub fn needs_anchors(self) -> bool {
        matches!(self, Self::KernelCombo | Self::KernelIndicator)
    }
}

#[derive(Clone, Debug)]
pub struct ValidationSet {
    family: ValidationFamily,
    seed: u64,
    dim: usize,
    /// One coefficient vector per function: `β` for linear families,
    /// `γ` for kernel families, unused for coordinates.
    coefficients: Vec<Vec<f64>>,
    anchors: Option<(SampleMatrix, KernelSpec)>,
}

pub fn make_validation_set(
    family: ValidationFamily,
    d: usize,
    count: usize,
    seed: u64,
    anchors: Option<&SampleMatrix>,
    kernel: Option<&KernelSpec>,
) -> Result<ValidationSet> {
    if d == 0 {
        return Err(invalid("d", "must be at least 1"));
    }
    if count == 0 {
        return Err(invalid("count", "need at least one validation function"));
    }
    let anchors = if family.needs_anchors() {
        let (a, k) = anchors
            .zip(kernel)
            .ok_or_else(|| invalid("anchors", "kernel families need anchors and a kernel"))?;
        a.check_dim(d)?;
        k.validate()?;
        Some((a.clone(), *k))
    } else {
        None
    };
    let mut rng = stage_rng(seed, "validation");
    let width = anchors.as_ref().map_or(d, |(a, _)| a.nrows());
    let coefficients = match family {
        ValidationFamily::Coordinate => (0..count.min(d)).map(|j| vec![j as f64]).collect(),
        _ => (0..count)
            .map(|_| (0..width).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect(),
    };
    Ok(ValidationSet {
        family,
        seed,
        dim: d,
        coefficients,
        anchors,
    })
}

impl ValidationSet {
    pub fn family(&self) -> ValidationFamily {
        self.family
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// `F × n` matrix of `u_l(x_i)`.
    pub fn evaluate(&self, x: &SampleMatrix) -> Result<Mat<f64>> {
        x.check_dim(self.dim)?;
        let f = self.len();
        let n = x.nrows();
        let indicator = |v: f64| if v > 0.0 { 1.0 } else { 0.0 };
        Ok(match self.family {
            ValidationFamily::Coordinate => Mat::from_fn(f, n, |l, i| x.row(i)[l]),
            ValidationFamily::Linear | ValidationFamily::Halfspace => {
                let half = self.family == ValidationFamily::Halfspace;
                Mat::from_fn(f, n, |l, i| {
                    let s: f64 = self.coefficients[l].iter().zip(x.row(i)).map(|(b, v)| b * v).sum();
                    if half {
                        indicator(s)
                    } else {
                        s
                    }
                })
            }
            ValidationFamily::KernelCombo | ValidationFamily::KernelIndicator => {
                let (anchors, kernel) = self.anchors.as_ref().expect("kernel family carries anchors");
                let k = gaussian_kernel_matrix(anchors, x, kernel)?;
                let half = self.family == ValidationFamily::KernelIndicator;
                let mut out = Mat::<f64>::zeros(f, n);
                for l in 0..f {
                    let vals = mat_t_vec(k.as_ref(), &self.coefficients[l]);
                    for (i, v) in vals.into_iter().enumerate() {
                        out[(l, i)] = if half { indicator(v) } else { v };
                    }
                }
                out
            }
        })
    }
}

/// `J = (1/F) Σ_l [ (1/n) Σ_i u_l(x_i) f(x_i) − (1/m) Σ_j u_l(x'_j) ]²`.
pub fn j_score(f_on_p: &[f64], u_on_p: MatRef<'_, f64>, u_on_q: MatRef<'_, f64>) -> Result<f64> {
    let f = u_on_p.nrows();
    if f == 0 {
        return Err(Error::Empty("validation set".into()));
    }
    if u_on_q.nrows() != f {
        return Err(Error::DimensionMismatch {
            expected: f,
            found: u_on_q.nrows(),
        });
    }
    if u_on_p.ncols() != f_on_p.len() {
        return Err(Error::DimensionMismatch {
            expected: u_on_p.ncols(),
            found: f_on_p.len(),
        });
    }
    let n = f_on_p.len() as f64;
    let m = u_on_q.ncols() as f64;
    let mut total = 0.0;
    for l in 0..f {
        let weighted: f64 = (0..f_on_p.len()).map(|i| u_on_p[(l, i)] * f_on_p[i]).sum::<f64>() / n;
        let target: f64 = (0..u_on_q.ncols()).map(|j| u_on_q[(l, j)]).sum::<f64>() / m;
        total += (weighted - target).powi(2);
    }
    Ok(total / f as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvOptions {
    pub folds: usize,
    pub seed: u64,
    /// Cross-validate on at most this many `p` points (random subset).
    pub max_p: Option<usize>,
    /// Score against at most this many `q` points (random subset).
    pub max_q: Option<usize>,
}

impl Default for CvOptions {
    fn default() -> Self {
        Self {
            folds: 5,
            seed: 0,
            max_p: None,
            max_q: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CvCell {
    pub t: f64,
    pub param: f64,
    /// `+∞` where the fit failed.
    pub fold_scores: Vec<f64>,
    pub mean_score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CvResult {
    pub cells: Vec<CvCell>,
    pub selected: usize,
    pub fold_count: usize,
}

impl CvResult {
    pub fn selected_cell(&self) -> &CvCell {
        &self.cells[self.selected]
    }
}

/// Deterministic partition of `0..n` into `folds` groups whose sizes differ
/// by at most one.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(invalid("folds", "need at least two folds"));
    }
    if n < folds {
        return Err(invalid("folds", format!("{folds} folds need at least {folds} points, got {n}")));
    }
    let perm = permutation(n, &mut stage_rng(seed, "folds"));
    let mut out = vec![Vec::with_capacity(n / folds + 1); folds];
    for (pos, idx) in perm.into_iter().enumerate() {
        out[pos % folds].push(idx);
    }
    for f in &mut out {
        f.sort_unstable();
    }
    Ok(out)
}

/// Index of the minimal score; ties go to the smallest `t`, then the largest
/// parameter. Non-finite scores never win over finite ones.
pub fn select_cell(cells: &[(f64, f64, f64)]) -> Option<usize> {
    let key = |s: f64| if s.is_nan() { f64::INFINITY } else { s };
    (0..cells.len()).reduce(|best, i| {
        let (bt, bp, bs) = cells[best];
        let (t, p, s) = cells[i];
        let better = match key(s).total_cmp(&key(bs)) {
            std::cmp::Ordering::Less => true,
            std::cmp::Ordering::Greater => false,
            std::cmp::Ordering::Equal => t < bt || (t == bt && p > bp),
        };
        if better {
            i
        } else {
            best
        }
    })
}

fn random_subset(x: &SampleMatrix, max: Option<usize>, seed: u64, stage: &str) -> Result<SampleMatrix> {
    match max {
        Some(k) if k < x.nrows() => {
            let mut idx = permutation(x.nrows(), &mut stage_rng(seed, stage));
            idx.truncate(k);
            idx.sort_unstable();
            x.select_rows(&idx)
        }
        _ => Ok(x.clone()),
    }
}

/// k-fold cross-validation over the `(t, param)` grid. For each fold the
/// estimator is fit on the remaining `p` points and all of `z_q`, evaluated on
/// the held-out fold, and scored by [`j_score`] against `z_q`.
pub fn kfold_cv(
    z_p: &SampleMatrix,
    z_q: &SampleMatrix,
    estimator: &dyn RatioEstimator,
    t_grid: &[f64],
    params: &[f64],
    validation: &ValidationSet,
    opts: &CvOptions,
) -> Result<CvResult> {
    if t_grid.is_empty() || params.is_empty() {
        return Err(Error::Empty("cross-validation grid".into()));
    }
    z_p.check_dim(z_q.ncols())?;
    let z_p = random_subset(z_p, opts.max_p, opts.seed, "cv-p")?;
    let z_q = random_subset(z_q, opts.max_q, opts.seed, "cv-q")?;
    let folds = fold_assignment(z_p.nrows(), opts.folds, opts.seed)?;
    let u_q = validation.evaluate(&z_q)?;
    let splits: Vec<(SampleMatrix, SampleMatrix, Mat<f64>)> = folds
        .iter()
        .map(|held| {
            let train: Vec<usize> = (0..z_p.nrows()).filter(|i| held.binary_search(i).is_err()).collect();
            let fold = z_p.select_rows(held)?;
            let u_fold = validation.evaluate(&fold)?;
            Ok((z_p.select_rows(&train)?, fold, u_fold))
        })
        .collect::<Result<_>>()?;

    let per_t: Vec<Vec<Vec<f64>>> = t_grid
        .par_iter()
        .map(|&t| {
            // scores[param][fold]
            let mut scores = vec![vec![f64::INFINITY; splits.len()]; params.len()];
            for (fi, (train, fold, u_fold)) in splits.iter().enumerate() {
                let Ok(models) = estimator.fit_grid(train, &z_q, t, params) else {
                    continue;
                };
                for (pi, model) in models.into_iter().enumerate() {
                    let score = model
                        .and_then(|m| m.evaluate(fold))
                        .and_then(|f| j_score(&f, u_fold.as_ref(), u_q.as_ref()));
                    if let Ok(s) = score {
                        if s.is_finite() {
                            scores[pi][fi] = s;
                        }
                    }
                }
            }
            scores
        })
        .collect();

    let mut cells = Vec::with_capacity(t_grid.len() * params.len());
    for (ti, &t) in t_grid.iter().enumerate() {
        for (pi, &param) in params.iter().enumerate() {
            let fold_scores = per_t[ti][pi].clone();
            let mean_score = fold_scores.iter().sum::<f64>() / fold_scores.len() as f64;
            cells.push(CvCell {
                t,
                param,
                fold_scores,
                mean_score,
            });
        }
    }
    let keys: Vec<(f64, f64, f64)> = cells.iter().map(|c| (c.t, c.param, c.mean_score)).collect();
    let selected = select_cell(&keys).expect("grid is nonempty");
    Ok(CvResult {
        cells,
        selected,
        fold_count: folds.len(),
    })
}

/// Root-mean-square difference.
pub fn l2_error(estimate: &[f64], truth: &[f64]) -> f64 {
    let n = estimate.len().max(1) as f64;
    (estimate.iter().zip(truth).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleChoice {
    pub t: f64,
    pub param: f64,
    pub error: f64,
}

/// Pick the cell whose fit (on all of `z_p`, `z_q`) has the smallest empirical
/// L2 distance to known ratio values `truth` at `eval_points`.
pub fn oracle_select(
    z_p: &SampleMatrix,
    z_q: &SampleMatrix,
    estimator: &dyn RatioEstimator,
    t_grid: &[f64],
    params: &[f64],
    eval_points: &SampleMatrix,
    truth: &[f64],
) -> Result<OracleChoice> {
    if t_grid.is_empty() || params.is_empty() {
        return Err(Error::Empty("oracle grid".into()));
    }
    if truth.len() != eval_points.nrows() {
        return Err(Error::DimensionMismatch {
            expected: eval_points.nrows(),
            found: truth.len(),
        });
    }
    let per_t: Vec<Vec<f64>> = t_grid
        .par_iter()
        .map(|&t| match estimator.fit_grid(z_p, z_q, t, params) {
            Ok(models) => models
                .into_iter()
                .map(|m| {
                    m.and_then(|m| m.evaluate(eval_points))
                        .map(|f| l2_error(&f, truth))
                        .ok()
                        .filter(|e| e.is_finite())
                        .unwrap_or(f64::INFINITY)
                })
                .collect(),
            Err(_) => vec![f64::INFINITY; params.len()],
        })
        .collect();
    let mut keys = Vec::new();
    for (ti, &t) in t_grid.iter().enumerate() {
        for (pi, &p) in params.iter().enumerate() {
            keys.push((t, p, per_t[ti][pi]));
        }
    }
    let (t, param, error) = keys[select_cell(&keys).expect("grid is nonempty")];
    if !error.is_finite() {
        return Err(Error::Numerical("every oracle cell failed".into()));
    }
    Ok(OracleChoice { t, param, error })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(v: &[f64]) -> SampleMatrix {
        SampleMatrix::from_column(v).unwrap()
    }

    #[test]
    fn coordinate_family_is_capped_at_dimension() {
        let v = make_validation_set(ValidationFamily::Coordinate, 3, 5, 1, None, None).unwrap();
        assert_eq!(v.len(), 3);
        let e = SampleMatrix::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        let u = v.evaluate(&e).unwrap();
        for j in 0..3 {
            assert_eq!(u[(j, j)], 1.0);
        }
    }

    #[test]
    fn same_seed_same_functions() {
        let probes = SampleMatrix::from_rows(&(0..12).map(|i| vec![i as f64 - 6.0, (i as f64).sin()]).collect::<Vec<_>>()).unwrap();
        let k = KernelSpec::gaussian(1.0).unwrap();
        for fam in [
            ValidationFamily::Linear,
            ValidationFamily::Halfspace,
            ValidationFamily::KernelCombo,
            ValidationFamily::KernelIndicator,
        ] {
            let a = make_validation_set(fam, 2, 4, 42, Some(&probes), Some(&k)).unwrap();
            let b = make_validation_set(fam, 2, 4, 42, Some(&probes), Some(&k)).unwrap();
            assert_eq!(a.evaluate(&probes).unwrap(), b.evaluate(&probes).unwrap());
        }
        assert!(make_validation_set(ValidationFamily::KernelCombo, 2, 4, 42, None, None).is_err());
        assert!(make_validation_set(ValidationFamily::Linear, 2, 0, 42, None, None).is_err());
    }

    #[test]
    fn halfspace_is_antisymmetric() {
        let v = make_validation_set(ValidationFamily::Halfspace, 2, 6, 3, None, None).unwrap();
        let x = SampleMatrix::from_rows(&[vec![0.3, -1.2], vec![-0.3, 1.2]]).unwrap();
        let u = v.evaluate(&x).unwrap();
        for l in 0..6 {
            assert_eq!(u[(l, 0)] + u[(l, 1)], 1.0);
        }
    }

    #[test]
    fn j_score_identities() {
        let z = col(&[0.1, -0.4, 2.0, 1.3]);
        for fam in [ValidationFamily::Linear, ValidationFamily::Halfspace, ValidationFamily::Coordinate] {
            let v = make_validation_set(fam, 1, 3, 8, None, None).unwrap();
            let u = v.evaluate(&z).unwrap();
            let j = j_score(&[1.0; 4], u.as_ref(), u.as_ref()).unwrap();
            assert!(j.abs() < 1e-30);
        }
        let ones_p = Mat::<f64>::from_fn(1, 5, |_, _| 1.0);
        let ones_q = Mat::<f64>::from_fn(1, 7, |_, _| 1.0);
        let j = j_score(&[2.5; 5], ones_p.as_ref(), ones_q.as_ref()).unwrap();
        assert!((j - 2.25).abs() < 1e-15);
        assert!(j_score(&[1.0; 4], ones_p.as_ref(), ones_q.as_ref()).is_err());
        let empty = Mat::<f64>::zeros(0, 5);
        assert!(j_score(&[1.0; 5], empty.as_ref(), empty.as_ref()).is_err());
    }

    #[test]
    fn folds_partition_evenly() {
        let folds = fold_assignment(23, 5, 4).unwrap();
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..23).collect::<Vec<_>>());
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        assert_eq!(folds, fold_assignment(23, 5, 4).unwrap());
        assert!(fold_assignment(3, 5, 4).is_err());
    }

    #[test]
    fn tie_break_prefers_small_t_then_large_param() {
        let cells = [(2.0, 1e-5, 1.0), (1.0, 1e-6, 1.0), (1.0, 1e-5, 1.0), (3.0, 1.0, 2.0)];
        assert_eq!(select_cell(&cells), Some(2));
        let cells = [(1.0, 1.0, f64::NAN), (2.0, 1.0, 5.0)];
        assert_eq!(select_cell(&cells), Some(1));
    }
}
