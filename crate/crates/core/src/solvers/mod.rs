//! Closed-form Tikhonov solvers for the empirical Fredholm problems.
//!
//! Every estimator is a kernel expansion over the `p`-sample,
//! `f(x) = Σ_i k_H(x_i, x) v_i`. Matrices follow one convention throughout:
//! `K_pp = (1/n) k(x_i, x_j)`, `K_pq = (1/m) k(x_i, x'_j)`,
//! `K_qp = (1/n) k(x'_j, x_i)`, `K_qq = (1/m) k(x'_i, x'_j)` and the
//! unnormalized RKHS Gram `K_H = k_H(x_i, x_j)`.

mod objective;
mod path;

use faer::{Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, require_positive, Error, Result};
use crate::kernel::{gaussian_kernel_matrix, scaled_kernel_matrix, KernelSpec};
use crate::linalg::{mat_t_vec, mat_vec, row_sums, solve_dense};
use crate::sample::SampleMatrix;
use crate::RatioModel;

pub use objective::{empirical_objective, objective_gradient, Objective};
pub use path::{solve_spectral, solve_type1_path, SpectralBasis, Type1Path};

/// Default regularization ladder `1e-5, 1e-6, …, 1e-10`.
pub const DEFAULT_LAMBDAS: [f64; 6] = [1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10];

/// How coefficients map to function values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    /// `f(x) = Σ_i k(x_i, x) v_i`
    Plain,
    /// `f(x) = (1/n) Σ_i k(x_i, x) v_i`
    OverN,
}

/// A fitted ratio `f = Σ_i k(x_i, ·) v_i` (or its `1/n`-scaled variant).
#[derive(Clone, Debug)]
pub struct RatioEstimate {
    centers: SampleMatrix,
    coefficients: Vec<f64>,
    kernel: KernelSpec,
    scale: Scale,
}

impl RatioEstimate {
    pub fn new(centers: SampleMatrix, coefficients: Vec<f64>, kernel: KernelSpec, scale: Scale) -> Result<Self> {
        if coefficients.len() != centers.nrows() {
            return Err(Error::DimensionMismatch {
                expected: centers.nrows(),
                found: coefficients.len(),
            });
        }
        kernel.validate()?;
        Ok(Self {
            centers,
            coefficients,
            kernel,
            scale,
        })
    }

    pub fn centers(&self) -> &SampleMatrix {
        &self.centers
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn scale(&self) -> Scale {
        self.scale
    }

    /// Same function expressed with [`Scale::Plain`] coefficients.
    pub fn to_plain(&self) -> Self {
        match self.scale {
            Scale::Plain => self.clone(),
            Scale::OverN => {
                let n = self.centers.nrows() as f64;
                Self {
                    coefficients: self.coefficients.iter().map(|v| v / n).collect(),
                    scale: Scale::Plain,
                    ..self.clone()
                }
            }
        }
    }

    /// Out-of-sample evaluation at every row of `x`.
    pub fn evaluate(&self, x: &SampleMatrix) -> Result<Vec<f64>> {
        self.centers.check_dim(x.ncols())?;
        let k = gaussian_kernel_matrix(&self.centers, x, &self.kernel)?;
        let mut out = mat_t_vec(k.as_ref(), &self.coefficients);
        if self.scale == Scale::OverN {
            let n = self.centers.nrows() as f64;
            out.iter_mut().for_each(|v| *v /= n);
        }
        Ok(out)
    }
}

impl RatioModel for RatioEstimate {
    fn evaluate(&self, x: &SampleMatrix) -> Result<Vec<f64>> {
        RatioEstimate::evaluate(self, x)
    }

    fn coefficients(&self) -> Option<Vec<f64>> {
        Some(self.to_plain().coefficients)
    }

    fn centers(&self) -> Option<&SampleMatrix> {
        Some(&self.centers)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    Type1L2p,
    Combined,
    RkhsLoss,
    Type2,
    Type15,
}

/// Regularization settings shared by the Tikhonov solvers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TikhonovConfig {
    pub lambda: f64,
    /// Weight of the `L2,p` term in the combined loss; ignored elsewhere.
    pub gamma: f64,
    pub setting: Setting,
}

impl TikhonovConfig {
    pub fn validate(&self) -> Result<()> {
        require_positive("lambda", self.lambda)?;
        check_gamma(self.gamma)
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if (0.0..=1.0).contains(&gamma) {
        Ok(())
    } else {
        Err(invalid("gamma", format!("must lie in [0, 1], got {gamma}")))
    }
}

/// All Gram matrices needed by the solvers and objectives for one pair of
/// samples. Immutable once built.
#[derive(Clone, Debug)]
pub struct GramBundle {
    pub k_pp: Mat<f64>,
    pub k_pq: Mat<f64>,
    pub k_qp: Mat<f64>,
    pub k_qq: Mat<f64>,
    pub k_h: Mat<f64>,
}

impl GramBundle {
    pub fn new(z_p: &SampleMatrix, z_q: &SampleMatrix, k: &KernelSpec, k_h: &KernelSpec) -> Result<Self> {
        z_p.check_dim(z_q.ncols())?;
        let n = z_p.nrows() as f64;
        let m = z_q.nrows() as f64;
        Ok(Self {
            k_pp: scaled_kernel_matrix(z_p, z_p, k, 1.0 / n)?,
            k_pq: scaled_kernel_matrix(z_p, z_q, k, 1.0 / m)?,
            k_qp: scaled_kernel_matrix(z_q, z_p, k, 1.0 / n)?,
            k_qq: scaled_kernel_matrix(z_q, z_q, k, 1.0 / m)?,
            k_h: gaussian_kernel_matrix(z_p, z_p, k_h)?,
        })
    }

    pub fn n(&self) -> usize {
        self.k_pp.nrows()
    }

    pub fn m(&self) -> usize {
        self.k_qq.nrows()
    }

    /// `K_pq 1`, the empirical `K_q 1` at the `p`-sample.
    pub fn q_smooth_at_p(&self) -> Vec<f64> {
        row_sums(self.k_pq.as_ref())
    }

    /// `K_qq 1`, the empirical `K_q 1` at the `q`-sample.
    pub fn q_smooth_at_q(&self) -> Vec<f64> {
        row_sums(self.k_qq.as_ref())
    }
}

/// Solve `(K_pp² K_H + nλ I) v = K_pp · target`: the stationarity condition of
/// `(1/n)‖K_pp K_H v − target‖² + λ vᵀ K_H v`. Shared by Type I, II and 1.5.
fn solve_l2p(k_pp: MatRef<'_, f64>, k_h: MatRef<'_, f64>, target: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let n = k_pp.nrows();
    let mut system = k_pp * (k_pp * k_h);
    let shift = n as f64 * lambda;
    for i in 0..n {
        system[(i, i)] += shift;
    }
    let rhs = mat_vec(k_pp, target);
    solve_dense(system.as_ref(), &rhs)
}

fn check_samples(z_p: &SampleMatrix, z_q: &SampleMatrix) -> Result<()> {
    z_p.check_dim(z_q.ncols())
}

/// Type I with the `L2,p` loss.
pub fn solve_type1(
    z_p: &SampleMatrix,
    z_q: &SampleMatrix,
    k: &KernelSpec,
    k_h: &KernelSpec,
    lambda: f64,
) -> Result<RatioEstimate> {
    solve_type15(z_p, z_q, k, k, k_h, lambda)
}

/// Type 1.5: like Type I, but the right-hand side `K′_pq 1` is smoothed with
/// a second kernel `k′` (entries `(1/m) k′(x_i, x'_j)`).
pub fn solve_type15(
    z_p: &SampleMatrix,
    z_q: &SampleMatrix,
    k: &KernelSpec,
    k_prime: &KernelSpec,
    k_h: &KernelSpec,
    lambda: f64,
) -> Result<RatioEstimate> {
    require_positive("lambda", lambda)?;
    check_samples(z_p, z_q)?;
    let n = z_p.nrows() as f64;
    let m = z_q.nrows() as f64;
    let k_pp = scaled_kernel_matrix(z_p, z_p, k, 1.0 / n)?;
    let k_pq = scaled_kernel_matrix(z_p, z_q, k_prime, 1.0 / m)?;
    let k_hm = gaussian_kernel_matrix(z_p, z_p, k_h)?;
    let target = row_sums(k_pq.as_ref());
    let v = solve_l2p(k_pp.as_ref(), k_hm.as_ref(), &target, lambda)?;
    RatioEstimate::new(z_p.clone(), v, *k_h, Scale::Plain)
}

/// Type II: the values `q(x_i)` are known at the `p`-sample. They need not be
/// a density (no sign or normalization requirement).
pub fn solve_type2(
    z_p: &SampleMatrix,
    q_values: &[f64],
    k: &KernelSpec,
    k_h: &KernelSpec,
    lambda: f64,
) -> Result<RatioEstimate> {
    require_positive("lambda", lambda)?;
    if q_values.len() != z_p.nrows() {
        return Err(Error::DimensionMismatch {
            expected: z_p.nrows(),
            found: q_values.len(),
        });
    }
    if q_values.iter().any(|v| !v.is_finite()) {
        return Err(invalid("q_values", "must be finite"));
    }
    let n = z_p.nrows() as f64;
    let k_pp = scaled_kernel_matrix(z_p, z_p, k, 1.0 / n)?;
    let k_hm = gaussian_kernel_matrix(z_p, z_p, k_h)?;
    let v = solve_l2p(k_pp.as_ref(), k_hm.as_ref(), q_values, lambda)?;
    RatioEstimate::new(z_p.clone(), v, *k_h, Scale::Plain)
}

/// Mixed loss `γ L2,p + (1 − γ) L2,q`. The system is derived from the
/// empirical objective, so the shift is `λ`, not `nλ`:
/// `[(γ/n) K_pp² + ((1−γ)/m) K_qpᵀ K_qp] K_H v + λ v
///   = (γ/n) K_pp K_pq 1 + ((1−γ)/m) K_qpᵀ K_qq 1`.
pub fn solve_combined(
    z_p: &SampleMatrix,
    z_q: &SampleMatrix,
    k: &KernelSpec,
    k_h: &KernelSpec,
    gamma: f64,
    lambda: f64,
) -> Result<RatioEstimate> {
    check_gamma(gamma)?;
    require_positive("lambda", lambda)?;
    let grams = GramBundle::new(z_p, z_q, k, k_h)?;
    let v = solve_combined_grams(&grams, gamma, lambda)?;
    RatioEstimate::new(z_p.clone(), v, *k_h, Scale::Plain)
}

pub(crate) fn solve_combined_grams(g: &GramBundle, gamma: f64, lambda: f64) -> Result<Vec<f64>> {
    let n = g.n();
    let wp = gamma / n as f64;
    let wq = (1.0 - gamma) / g.m() as f64;
    let k_pp = g.k_pp.as_ref();
    let k_qp = g.k_qp.as_ref();
    let mut left = Mat::<f64>::zeros(n, n);
    let mut rhs = vec![0.0; n];
    if wp != 0.0 {
        left += (k_pp * k_pp) * wp;
        let b = mat_vec(k_pp, &g.q_smooth_at_p());
        rhs.iter_mut().zip(&b).for_each(|(r, x)| *r += wp * x);
    }
    if wq != 0.0 {
        left += (k_qp.transpose() * k_qp) * wq;
        let b = mat_t_vec(k_qp, &g.q_smooth_at_q());
        rhs.iter_mut().zip(&b).for_each(|(r, x)| *r += wq * x);
    }
    let mut system = left * g.k_h.as_ref();
    for i in 0..n {
        system[(i, i)] += lambda;
    }
    solve_dense(system.as_ref(), &rhs)
}

/// RKHS-norm loss: `(K_pp K_H + nλ I) v = K_pq 1`. The loss is measured in the
/// RKHS of `k` and the penalty in the RKHS of `k_h`; the usual case is `k = k_h`.
pub fn solve_rkhs_loss(
    z_p: &SampleMatrix,
    z_q: &SampleMatrix,
    k: &KernelSpec,
    k_h: &KernelSpec,
    lambda: f64,
) -> Result<RatioEstimate> {
    require_positive("lambda", lambda)?;
    check_samples(z_p, z_q)?;
    let n = z_p.nrows();
    let k_pp = scaled_kernel_matrix(z_p, z_p, k, 1.0 / n as f64)?;
    let k_pq = scaled_kernel_matrix(z_p, z_q, k, 1.0 / z_q.nrows() as f64)?;
    let k_hm = gaussian_kernel_matrix(z_p, z_p, k_h)?;
    let mut system = k_pp.as_ref() * k_hm.as_ref();
    let shift = n as f64 * lambda;
    for i in 0..n {
        system[(i, i)] += shift;
    }
    let v = solve_dense(system.as_ref(), &row_sums(k_pq.as_ref()))?;
    RatioEstimate::new(z_p.clone(), v, *k_h, Scale::Plain)
}
