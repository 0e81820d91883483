//! Solvers that reuse a single eigendecomposition `K_pp = Q Λ Qᵀ`.

use crate::error::{invalid, require_positive, Error, Result};
use crate::kernel::{scaled_kernel_matrix, KernelSpec};
use crate::linalg::{row_sums, sym_eigen, SymEigen};
use crate::sample::SampleMatrix;

use super::{RatioEstimate, Scale};

/// Type I regularization path for `k_H = k`. With `(1/n) K_H = K_pp` the
/// solution is `v(λ) = Q (Λ³ + λI)⁻¹ Λ Qᵀ K_pq 1` in the `1/n` scale.
#[derive(Clone, Debug)]
pub struct Type1Path {
    centers: SampleMatrix,
    kernel: KernelSpec,
    eigen: SymEigen,
    projected_rhs: Vec<f64>,
}

impl Type1Path {
    pub fn new(z_p: &SampleMatrix, z_q: &SampleMatrix, k: &KernelSpec) -> Result<Self> {
        z_p.check_dim(z_q.ncols())?;
        let n = z_p.nrows() as f64;
        let m = z_q.nrows() as f64;
        let k_pp = scaled_kernel_matrix(z_p, z_p, k, 1.0 / n)?;
        let k_pq = scaled_kernel_matrix(z_p, z_q, k, 1.0 / m)?;
        let eigen = sym_eigen(k_pp.as_ref())?;
        let projected_rhs = eigen.project(&row_sums(k_pq.as_ref()));
        Ok(Self {
            centers: z_p.clone(),
            kernel: *k,
            eigen,
            projected_rhs,
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigen.values
    }

    /// Coefficients in the eigenbasis, `(Λ³ + λI)⁻¹ Λ Qᵀ K_pq 1`.
    pub fn spectral_coefficients(&self, lambda: f64) -> Vec<f64> {
        self.eigen
            .values
            .iter()
            .zip(&self.projected_rhs)
            .map(|(mu, c)| mu * c / (mu * mu * mu + lambda))
            .collect()
    }

    pub fn estimate(&self, lambda: f64) -> Result<RatioEstimate> {
        require_positive("lambda", lambda)?;
        let v = self.eigen.combine(&self.spectral_coefficients(lambda));
        crate::linalg::check_finite(&v, "regularization path")?;
        RatioEstimate::new(self.centers.clone(), v, self.kernel, Scale::OverN)
    }
}

/// Type I Tikhonov path over `lambdas` from one eigendecomposition. Requires
/// the RKHS kernel to equal the smoothing kernel.
pub fn solve_type1_path(
    z_p: &SampleMatrix,
    z_q: &SampleMatrix,
    k: &KernelSpec,
    k_h: &KernelSpec,
    lambdas: &[f64],
) -> Result<Vec<RatioEstimate>> {
    if k != k_h {
        return Err(invalid("k_h", "regularization path needs k_H identical to k"));
    }
    if lambdas.is_empty() {
        return Err(Error::Empty("lambda sequence".into()));
    }
    for &l in lambdas {
        require_positive("lambda", l)?;
    }
    let path = Type1Path::new(z_p, z_q, k)?;
    lambdas.iter().map(|&l| path.estimate(l)).collect()
}

/// Eigenbasis of `K_pp` for spectral-cutoff regularization.
#[derive(Clone, Debug)]
pub struct SpectralBasis {
    centers: SampleMatrix,
    kernel: KernelSpec,
    eigen: SymEigen,
}

/// Relative floor below which a retained eigenvalue makes the cutoff invalid.
pub const SPECTRAL_FLOOR: f64 = 1e-12;

impl SpectralBasis {
    pub fn new(z_p: &SampleMatrix, k: &KernelSpec) -> Result<Self> {
        let n = z_p.nrows() as f64;
        let k_pp = scaled_kernel_matrix(z_p, z_p, k, 1.0 / n)?;
        Ok(Self {
            centers: z_p.clone(),
            kernel: *k,
            eigen: sym_eigen(k_pp.as_ref())?,
        })
    }

    pub fn eigen(&self) -> &SymEigen {
        &self.eigen
    }

    /// `v = Q_k Λ_k⁻² Q_kᵀ target`, so that `K_pp² v` is the orthogonal
    /// projection of `target` onto the top-`cutoff` eigenvectors.
    pub fn solve(&self, target: &[f64], cutoff: usize) -> Result<RatioEstimate> {
        let n = self.centers.nrows();
        if target.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: target.len(),
            });
        }
        if cutoff == 0 || cutoff > n {
            return Err(invalid("cutoff_k", format!("must lie in 1..={n}, got {cutoff}")));
        }
        let values = &self.eigen.values;
        let threshold = SPECTRAL_FLOOR * values[0];
        if let Some(index) = values[..cutoff].iter().position(|&v| v < threshold || v <= 0.0) {
            return Err(Error::RankDeficient {
                index,
                value: values[index],
                threshold,
            });
        }
        let proj = self.eigen.project(target);
        let coeffs: Vec<f64> = (0..n)
            .map(|i| if i < cutoff { proj[i] / (values[i] * values[i]) } else { 0.0 })
            .collect();
        let v = self.eigen.combine(&coeffs);
        crate::linalg::check_finite(&v, "spectral cutoff")?;
        RatioEstimate::new(self.centers.clone(), v, self.kernel, Scale::OverN)
    }
}

/// Spectral-cutoff estimate. `target` is `K_pq 1` (Type I) or the values
/// `q(x_i)` (Type II).
pub fn solve_spectral(z_p: &SampleMatrix, target: &[f64], k: &KernelSpec, cutoff: usize) -> Result<RatioEstimate> {
    SpectralBasis::new(z_p, k)?.solve(target, cutoff)
}
