//! Comparator estimators and analytic densities for simulation studies.

use std::f64::consts::PI;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, require_positive, Error, Result};
use crate::kernel::{kde, scaled_kernel_matrix, KernelSpec};
use crate::linalg::{mat_t_vec, row_sums, sym_eigen, SymEigen};
use crate::sample::SampleMatrix;
use crate::RatioModel;

/// An analytic density on `ℝ^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DensitySpec {
    /// Isotropic Gaussian `N(mean, sd² I)`.
    Gaussian { mean: Vec<f64>, sd: f64 },
    /// Uniform on the cube `[low, high]^dim`.
    Uniform { low: f64, high: f64, dim: usize },
    Mixture {
        weights: Vec<f64>,
        components: Vec<DensitySpec>,
    },
}

impl DensitySpec {
    pub fn gaussian_1d(mean: f64, sd: f64) -> Self {
        Self::Gaussian { mean: vec![mean], sd }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Gaussian { mean, sd } => {
                if mean.is_empty() {
                    return Err(invalid("mean", "must have at least one coordinate"));
                }
                require_positive("sd", *sd)
            }
            Self::Uniform { low, high, dim } => {
                if *dim == 0 {
                    return Err(invalid("dim", "must be at least 1"));
                }
                if !(low < high) || !low.is_finite() || !high.is_finite() {
                    return Err(invalid("low", format!("need finite low < high, got [{low}, {high}]")));
                }
                Ok(())
            }
            Self::Mixture { weights, components } => {
                if weights.is_empty() || weights.len() != components.len() {
                    return Err(invalid("weights", "need one weight per component"));
                }
                if weights.iter().any(|w| !(*w >= 0.0)) {
                    return Err(invalid("weights", "must be non-negative"));
                }
                if (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                    return Err(invalid("weights", "must sum to 1"));
                }
                let d = components[0].dimension();
                for c in components {
                    c.validate()?;
                    if c.dimension() != d {
                        return Err(Error::DimensionMismatch { expected: d, found: c.dimension() });
                    }
                }
                Ok(())
            }
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            Self::Gaussian { mean, .. } => mean.len(),
            Self::Uniform { dim, .. } => *dim,
            Self::Mixture { components, .. } => components.first().map_or(0, Self::dimension),
        }
    }

    pub fn pdf(&self, x: &[f64]) -> f64 {
        match self {
            Self::Gaussian { mean, sd } => {
                let d = mean.len() as f64;
                let sq: f64 = x.iter().zip(mean).map(|(a, b)| (a - b) * (a - b)).sum();
                (2.0 * PI * sd * sd).powf(-d / 2.0) * (-sq / (2.0 * sd * sd)).exp()
            }
            Self::Uniform { low, high, dim } => {
                if x.iter().all(|v| (*low..=*high).contains(v)) {
                    (high - low).powi(-(*dim as i32))
                } else {
                    0.0
                }
            }
            Self::Mixture { weights, components } => {
                weights.iter().zip(components).map(|(w, c)| w * c.pdf(x)).sum()
            }
        }
    }

    pub fn pdf_at(&self, x: &SampleMatrix) -> Result<Vec<f64>> {
        x.check_dim(self.dimension())?;
        Ok(x.rows().map(|r| self.pdf(r)).collect())
    }
}

/// The exact ratio `q(x)/p(x)` of two analytic densities.
#[derive(Clone, Debug)]
pub struct TrueRatio {
    pub p: DensitySpec,
    pub q: DensitySpec,
}

pub fn true_ratio(p: DensitySpec, q: DensitySpec) -> Result<TrueRatio> {
    p.validate()?;
    q.validate()?;
    if p.dimension() != q.dimension() {
        return Err(Error::DimensionMismatch {
            expected: p.dimension(),
            found: q.dimension(),
        });
    }
    Ok(TrueRatio { p, q })
}

impl TrueRatio {
    pub fn at(&self, x: &[f64]) -> Result<f64> {
        let p = self.p.pdf(x);
        if p <= 0.0 {
            return Err(Error::Degenerate(format!("p vanishes at {x:?}; ratio undefined")));
        }
        Ok(self.q.pdf(x) / p)
    }
}

impl RatioModel for TrueRatio {
    fn evaluate(&self, x: &SampleMatrix) -> Result<Vec<f64>> {
        x.check_dim(self.p.dimension())?;
        x.rows().map(|r| self.at(r)).collect()
    }
}

/// Thresholded inverse KDE: `q̂(x) / max(p̂(x), ε)` with one shared bandwidth.
#[derive(Clone, Debug)]
pub struct Tikde {
    z_p: SampleMatrix,
    z_q: SampleMatrix,
    kernel: KernelSpec,
    epsilon: f64,
}

pub fn tikde(z_p: &SampleMatrix, z_q: &SampleMatrix, t: f64, epsilon: f64) -> Result<Tikde> {
    let kernel = KernelSpec::gaussian(t)?;
    require_positive("epsilon", epsilon)?;
    z_p.check_dim(z_q.ncols())?;
    Ok(Tikde {
        z_p: z_p.clone(),
        z_q: z_q.clone(),
        kernel,
        epsilon,
    })
}

/// Relative thresholds `10⁻¹ … 10⁻⁶`, multiplied by `max p̂` over the `p`-sample.
pub const TIKDE_RELATIVE_THRESHOLDS: [f64; 6] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6];

/// Absolute TIKDE thresholds for bandwidth `t`.
pub fn tikde_epsilon_grid(z_p: &SampleMatrix, t: f64) -> Result<Vec<f64>> {
    let p_hat = kde(z_p, z_p, &KernelSpec::gaussian(t)?)?;
    let max = p_hat.iter().cloned().fold(0.0, f64::max);
    Ok(TIKDE_RELATIVE_THRESHOLDS.iter().map(|r| r * max).collect())
}

impl Tikde {
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

impl RatioModel for Tikde {
    fn evaluate(&self, x: &SampleMatrix) -> Result<Vec<f64>> {
        let p_hat = kde(&self.z_p, x, &self.kernel)?;
        let q_hat = kde(&self.z_q, x, &self.kernel)?;
        Ok(q_hat
            .iter()
            .zip(&p_hat)
            .map(|(q, p)| q / p.max(self.epsilon))
            .collect())
    }
}

/// Default regularization ladder for [`lsif_unconstrained`]. `Ĥ` has entries of
/// order one, so this sits well above the FIRE ladder.
pub const LSIF_LAMBDAS: [f64; 6] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6];

/// Unconstrained least-squares importance fitting with one Gaussian basis
/// function per `q`-sample point: `r(x) = Σ_l α_l k_t(x'_l, x)`.
#[derive(Clone, Debug)]
pub struct Lsif {
    basis: SampleMatrix,
    kernel: KernelSpec,
    alpha: Vec<f64>,
}

impl Lsif {
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }
}

impl RatioModel for Lsif {
    fn evaluate(&self, x: &SampleMatrix) -> Result<Vec<f64>> {
        let k = scaled_kernel_matrix(&self.basis, x, &self.kernel, 1.0)?;
        Ok(mat_t_vec(k.as_ref(), &self.alpha))
    }

    fn coefficients(&self) -> Option<Vec<f64>> {
        Some(self.alpha.clone())
    }

    fn centers(&self) -> Option<&SampleMatrix> {
        Some(&self.basis)
    }
}

/// `Ĥ = (1/n) Φᵀ Φ` with `Φ_il = k(x'_l, x_i)`, and `ĥ = (1/m) Σ_j k(x'_l, x'_j)`.
pub fn lsif_system(z_p: &SampleMatrix, z_q: &SampleMatrix, t: f64) -> Result<(Mat<f64>, Vec<f64>)> {
    let kernel = KernelSpec::gaussian(t)?;
    z_p.check_dim(z_q.ncols())?;
    let phi = scaled_kernel_matrix(z_p, z_q, &kernel, 1.0)?;
    let h_mat = phi.transpose() * phi.as_ref() * (1.0 / z_p.nrows() as f64);
    let h_vec = row_sums(scaled_kernel_matrix(z_q, z_q, &kernel, 1.0 / z_q.nrows() as f64)?.as_ref());
    Ok((h_mat, h_vec))
}

/// Solves `(Ĥ + λI) α = ĥ`.
pub fn lsif_unconstrained(z_p: &SampleMatrix, z_q: &SampleMatrix, t: f64, lambda: f64) -> Result<Lsif> {
    require_positive("lambda", lambda)?;
    LsifPath::new(z_p, z_q, t)?.estimate(lambda)
}

/// All `λ` for one bandwidth from a single eigendecomposition of `Ĥ`.
#[derive(Clone, Debug)]
pub struct LsifPath {
    basis: SampleMatrix,
    kernel: KernelSpec,
    eigen: SymEigen,
    projected: Vec<f64>,
}

impl LsifPath {
    pub fn new(z_p: &SampleMatrix, z_q: &SampleMatrix, t: f64) -> Result<Self> {
        let (h_mat, h_vec) = lsif_system(z_p, z_q, t)?;
        let eigen = sym_eigen(h_mat.as_ref())?;
        let projected = eigen.project(&h_vec);
        Ok(Self {
            basis: z_q.clone(),
            kernel: KernelSpec::gaussian(t)?,
            eigen,
            projected,
        })
    }

    pub fn estimate(&self, lambda: f64) -> Result<Lsif> {
        require_positive("lambda", lambda)?;
        let coeffs: Vec<f64> = self
            .eigen
            .values
            .iter()
            .zip(&self.projected)
            .map(|(mu, c)| c / (mu.max(0.0) + lambda))
            .collect();
        let alpha = self.eigen.combine(&coeffs);
        crate::linalg::check_finite(&alpha, "lsif")?;
        Ok(Lsif {
            basis: self.basis.clone(),
            kernel: self.kernel,
            alpha,
        })
    }
}
