//! Density-ratio estimation by regularized Fredholm-equation solvers.
//!
//! The ratio `q/p` of two densities is the solution of a first-kind integral
//! equation `K_p f = K_q 1`, where `K_p` is convolution with a kernel against
//! `p`. Replacing both sides by their sample estimates and adding an RKHS
//! penalty gives a family of closed-form kernel estimators
//! `f(x) = Σ_i k_H(x_i, x) v_i` with centers at the `p`-sample.
//!
//! Module map:
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`kernel`] | Gaussian kernels, Gram matrices, bandwidth grid, KDE |
//! | [`solvers`] | Type I / II / 1.5 solvers, combined and RKHS losses, regularization paths, spectral cutoff |
//! | [`baselines`] | TIKDE, unconstrained LSIF, analytic densities and true ratios |
//! | [`selection`] | J score, validation-function families, k-fold CV, oracle selection |
//! | [`estimators`] | Grid-fittable wrappers around solvers and baselines |
//! | [`data`] | CSV ingestion, first principal component, resampling, simulation |
//! | [`downstream`] | Importance-weighted least squares and linear SVM |
//!
//! Bandwidths are always the variance-like `t` of
//! `k_t(x, y) = (2πt)^{-d/2} exp(-‖x - y‖² / 2t)`.

pub mod baselines;
pub mod data;
pub mod downstream;
pub mod error;
pub mod estimators;
pub mod kernel;
pub mod linalg;
pub mod rng;
pub mod sample;
pub mod selection;
pub mod solvers;

pub use error::{Error, Result};
pub use kernel::KernelSpec;
pub use sample::SampleMatrix;
pub use solvers::RatioEstimate;

/// Anything that can be evaluated as a ratio estimate at arbitrary points.
pub trait RatioModel {
    fn evaluate(&self, x: &SampleMatrix) -> Result<Vec<f64>>;

    /// Kernel-expansion coefficients in the plain scale
    /// `f(x) = Σ_i k(c_i, x) a_i`, for models that have one.
    fn coefficients(&self) -> Option<Vec<f64>> {
        None
    }

    /// Expansion centers matching [`RatioModel::coefficients`].
    fn centers(&self) -> Option<&SampleMatrix> {
        None
    }
}

/// Pointwise `max(f, 0)`. Solvers never clip; callers that need
/// non-negative weights apply this explicitly.
pub fn clamp_nonnegative(values: &mut [f64]) {
    for v in values {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}
