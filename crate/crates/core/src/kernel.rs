//! Gaussian δ-family kernels and the quantities built directly from them.
//!
//! `t` is the variance parameter: the exponent is `−‖x − y‖² / (2t)`, so a
//! bandwidth of `t` corresponds to a standard deviation of `√t`.

use std::f64::consts::PI;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, require_positive, Error, Result};
use crate::sample::SampleMatrix;

/// Number of neighbors averaged by [`bandwidth_grid`].
pub const NEIGHBORS: usize = 10;
/// Length of the bandwidth ladder `t0, 2 t0, …, 2^9 t0`.
pub const GRID_LEN: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    Gaussian,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub t: f64,
    /// Apply the `(2πt)^{-d/2}` prefactor so the kernel integrates to one.
    pub normalized: bool,
}

impl KernelSpec {
    /// Normalized Gaussian `k_t`.
    pub fn gaussian(t: f64) -> Result<Self> {
        require_positive("t", t)?;
        Ok(Self {
            family: KernelFamily::Gaussian,
            t,
            normalized: true,
        })
    }

    pub fn gaussian_unnormalized(t: f64) -> Result<Self> {
        Ok(Self {
            normalized: false,
            ..Self::gaussian(t)?
        })
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("t", self.t)
    }

    /// Same family and normalization, bandwidth scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        require_positive("factor", factor)?;
        Ok(Self {
            t: self.t * factor,
            ..*self
        })
    }

    pub fn prefactor(&self, d: usize) -> f64 {
        if self.normalized {
            (2.0 * PI * self.t).powf(-(d as f64) / 2.0)
        } else {
            1.0
        }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        self.prefactor(x.len()) * (-sq_dist(x, y) / (2.0 * self.t)).exp()
    }
}

pub fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// `K[i, j] = k_t(a_i, b_j)`.
pub fn gaussian_kernel_matrix(a: &SampleMatrix, b: &SampleMatrix, spec: &KernelSpec) -> Result<Mat<f64>> {
    scaled_kernel_matrix(a, b, spec, 1.0)
}

/// `K[i, j] = scale · k_t(a_i, b_j)`; the empirical operators use
/// `scale = 1/n` or `1/m`.
pub fn scaled_kernel_matrix(a: &SampleMatrix, b: &SampleMatrix, spec: &KernelSpec, scale: f64) -> Result<Mat<f64>> {
    spec.validate()?;
    a.check_dim(b.ncols())?;
    let c = scale * spec.prefactor(a.ncols());
    let inv = 1.0 / (2.0 * spec.t);
    crate::linalg::clear_upper_simd();
    Ok(Mat::from_fn(a.nrows(), b.nrows(), |i, j| {
        c * (-sq_dist(a.row(i), b.row(j)) * inv).exp()
    }))
}

#[derive(Clone, Debug, PartialEq)]
pub struct BandwidthGrid {
    pub t0: f64,
    pub grid: Vec<f64>,
}

/// `t0` is the mean over points of the mean Euclidean distance to the point's
/// ten nearest neighbors (self excluded); the grid is `t0 · 2^j`, `j = 0, …, 9`.
pub fn bandwidth_grid(points: &SampleMatrix) -> Result<BandwidthGrid> {
    let n = points.nrows();
    if n <= NEIGHBORS {
        return Err(invalid(
            "points",
            format!("need at least {} points for {NEIGHBORS}-NN distances, got {n}", NEIGHBORS + 1),
        ));
    }
    let mut dists = Vec::with_capacity(n - 1);
    let mut total = 0.0;
    for i in 0..n {
        dists.clear();
        dists.extend(
            (0..n)
                .filter(|&j| j != i)
                .map(|j| sq_dist(points.row(i), points.row(j)).sqrt()),
        );
        dists.select_nth_unstable_by(NEIGHBORS - 1, f64::total_cmp);
        total += dists[..NEIGHBORS].iter().sum::<f64>() / NEIGHBORS as f64;
    }
    let t0 = total / n as f64;
    if t0 <= 0.0 {
        return Err(Error::Degenerate("all points coincide; nearest-neighbor distance is zero".into()));
    }
    let grid = (0..GRID_LEN).map(|j| t0 * f64::powi(2.0, j as i32)).collect();
    Ok(BandwidthGrid { t0, grid })
}

/// Kernel density estimate `(1/n) Σ_i k_t(x_i, y_j)` at every row of `eval_at`.
pub fn kde(points: &SampleMatrix, eval_at: &SampleMatrix, spec: &KernelSpec) -> Result<Vec<f64>> {
    if !spec.normalized {
        return Err(invalid("spec", "kernel density estimates need a normalized kernel"));
    }
    spec.validate()?;
    points.check_dim(eval_at.ncols())?;
    let n = points.nrows() as f64;
    Ok(eval_at
        .rows()
        .map(|y| points.rows().map(|x| spec.eval(x, y)).sum::<f64>() / n)
        .collect())
}
