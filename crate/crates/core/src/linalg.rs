//! Thin layer over faer: symmetric eigendecomposition with a fixed ordering
//! and sign convention, dense solves, and minimum-norm least squares.

use faer::linalg::solvers::Solve;
use faer::{Col, Mat, MatRef, Side};

use crate::error::{Error, Result};

/// faer dispatches to AVX kernels at runtime and can return with the upper
/// vector lanes dirty. Legacy-SSE code that follows (this crate, unless built
/// with AVX enabled) then pays a transition penalty on every instruction,
/// which made kernel fills after a decomposition about 15x slower.
#[inline]
pub(crate) fn clear_upper_simd() {
    #[cfg(all(target_arch = "x86_64", not(target_feature = "avx")))]
    {
        use std::sync::OnceLock;
        static HAS_AVX: OnceLock<bool> = OnceLock::new();
        if *HAS_AVX.get_or_init(|| std::arch::is_x86_feature_detected!("avx")) {
            // SAFETY: AVX is present; every vector register is declared clobbered.
            unsafe { std::arch::asm!("vzeroupper", clobber_abi("C"), options(nostack, preserves_flags)) };
        }
    }
}

/// `A = Q diag(values) Qᵀ`, eigenvalues descending, each eigenvector's first
/// non-negligible component positive.
#[derive(Clone, Debug)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Mat<f64>,
}

pub fn sym_eigen(a: MatRef<'_, f64>) -> Result<SymEigen> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.ncols(),
        });
    }
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigendecomposition failed: {e:?}")));
    clear_upper_simd();
    let evd = evd?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let mut values = Vec::with_capacity(n);
    let mut vectors = Mat::<f64>::zeros(n, n);
    for (out, src) in (0..n).rev().enumerate() {
        values.push(s[src]);
        let col = u.col(src);
        let flip = col
            .iter()
            .find(|x| x.abs() > 1e-12)
            .is_some_and(|x| *x < 0.0);
        let sign = if flip { -1.0 } else { 1.0 };
        for i in 0..n {
            vectors[(i, out)] = sign * col[i];
        }
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite eigenvalue".into()));
    }
    Ok(SymEigen { values, vectors })
}

impl SymEigen {
    /// `Qᵀ x`.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        mat_t_vec(self.vectors.as_ref(), x)
    }

    /// `Q diag(coeffs)`-weighted combination of the eigenvectors.
    pub fn combine(&self, coeffs: &[f64]) -> Vec<f64> {
        mat_vec(self.vectors.as_ref(), coeffs)
    }
}

pub fn mat_vec(a: MatRef<'_, f64>, x: &[f64]) -> Vec<f64> {
    assert_eq!(a.ncols(), x.len());
    let mut out = vec![0.0; a.nrows()];
    for (j, xj) in x.iter().enumerate() {
        if *xj == 0.0 {
            continue;
        }
        let col = a.col(j);
        for (o, aij) in out.iter_mut().zip(col.iter()) {
            *o += aij * xj;
        }
    }
    out
}

pub fn mat_t_vec(a: MatRef<'_, f64>, x: &[f64]) -> Vec<f64> {
    assert_eq!(a.nrows(), x.len());
    (0..a.ncols())
        .map(|j| a.col(j).iter().zip(x).map(|(aij, xi)| aij * xi).sum())
        .collect()
}

pub fn row_sums(a: MatRef<'_, f64>) -> Vec<f64> {
    let mut out = vec![0.0; a.nrows()];
    for j in 0..a.ncols() {
        for (o, aij) in out.iter_mut().zip(a.col(j).iter()) {
            *o += aij;
        }
    }
    out
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn check_finite(v: &[f64], what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numerical(format!("{what} produced non-finite values")))
    }
}

/// Solve `A x = b` by LU with partial pivoting.
pub fn solve_dense(a: MatRef<'_, f64>, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: b.len(),
        });
    }
    let rhs = Col::<f64>::from_fn(n, |i| b[i]);
    let x = a.partial_piv_lu().solve(&rhs);
    clear_upper_simd();
    let x: Vec<f64> = x.iter().copied().collect();
    check_finite(&x, "dense solve")?;
    Ok(x)
}

/// Minimum-norm minimizer of `‖A x − b‖` via a thin SVD. Singular values
/// below `max(rows, cols) · ε · σ_max` are treated as zero.
pub fn lstsq_min_norm(a: MatRef<'_, f64>, b: &[f64]) -> Result<Vec<f64>> {
    if a.nrows() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: b.len(),
        });
    }
    let svd = a
        .thin_svd()
        .map_err(|e| Error::Numerical(format!("svd failed: {e:?}")));
    clear_upper_simd();
    let svd = svd?;
    let s = svd.S().column_vector();
    let smax = s.iter().fold(0.0f64, |m, v| m.max(*v));
    let tol = a.nrows().max(a.ncols()) as f64 * f64::EPSILON * smax;
    let utb = mat_t_vec(svd.U(), b);
    let scaled: Vec<f64> = utb
        .iter()
        .zip(s.iter())
        .map(|(c, sv)| if *sv > tol { c / sv } else { 0.0 })
        .collect();
    let x = mat_vec(svd.V(), &scaled);
    check_finite(&x, "least squares")?;
    Ok(x)
}
