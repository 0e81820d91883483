//! Grid-fittable estimators: one fit per `(t, param)` cell, sharing work
//! across the `param` axis where the algebra allows.

use serde::{Deserialize, Serialize};

use crate::baselines::{tikde, tikde_epsilon_grid, DensitySpec, LsifPath};
use crate::error::{invalid, Result};
use crate::kernel::{scaled_kernel_matrix, KernelSpec};
use crate::linalg::row_sums;
use crate::sample::SampleMatrix;
use crate::solvers::{
    solve_combined_grams, solve_rkhs_loss, solve_type1, solve_type15, solve_type2, GramBundle, RatioEstimate, Scale,
    SpectralBasis, Type1Path,
};
use crate::RatioModel;

pub type BoxedModel = Box<dyn RatioModel + Send + Sync>;

/// A ratio estimator with two tuning axes: a bandwidth `t` and a second
/// parameter (`λ`, a threshold, or a cutoff, depending on the method).
pub trait RatioEstimator: Send + Sync {
    fn name(&self) -> String;

    /// Fit one model per entry of `params` at bandwidth `t`. The outer error
    /// fails every cell; inner errors fail single cells.
    fn fit_grid(
        &self,
        z_p: &SampleMatrix,
        z_q: &SampleMatrix,
        t: f64,
        params: &[f64],
    ) -> Result<Vec<Result<BoxedModel>>>;
}

fn boxed<M: RatioModel + Send + Sync + 'static>(r: Result<M>) -> Result<BoxedModel> {
    r.map(|m| Box::new(m) as BoxedModel)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "setting", rename_all = "snake_case")]
pub enum FireSetting {
    /// `L2,p` loss.
    Type1,
    /// `γ L2,p + (1 − γ) L2,q` loss.
    Combined { gamma: f64 },
    /// RKHS-norm loss.
    RkhsLoss,
    /// Right-hand side smoothed with a kernel of bandwidth `ratio · t`.
    Type15 { bandwidth_ratio: f64 },
    /// `q` known analytically and evaluated at the `p`-sample.
    Type2 { q: DensitySpec },
    /// Type I spectral cutoff; the parameter axis holds cutoffs.
    Spectral,
}

/// FIRE estimator with smoothing kernel `k_t` and RKHS kernel
/// `k_{t · rkhs_width_factor}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fire {
    pub setting: FireSetting,
    pub rkhs_width_factor: f64,
}

impl Fire {
    pub fn new(setting: FireSetting) -> Self {
        Self {
            setting,
            rkhs_width_factor: 1.0,
        }
    }

    pub fn type1() -> Self {
        Self::new(FireSetting::Type1)
    }
}

impl RatioEstimator for Fire {
    fn name(&self) -> String {
        match &self.setting {
            FireSetting::Type1 => "fire_type1".into(),
            FireSetting::Combined { gamma } => format!("fire_combined_{gamma}"),
            FireSetting::RkhsLoss => "fire_rkhs".into(),
            FireSetting::Type15 { .. } => "fire_type15".into(),
            FireSetting::Type2 { .. } => "fire_type2".into(),
            FireSetting::Spectral => "fire_spectral".into(),
        }
    }

    fn fit_grid(
        &self,
        z_p: &SampleMatrix,
        z_q: &SampleMatrix,
        t: f64,
        params: &[f64],
    ) -> Result<Vec<Result<BoxedModel>>> {
        let k = KernelSpec::gaussian(t)?;
        let k_h = k.scaled(self.rkhs_width_factor)?;
        let same_kernel = k == k_h;
        Ok(match &self.setting {
            FireSetting::Type1 if same_kernel => {
                let path = Type1Path::new(z_p, z_q, &k)?;
                params.iter().map(|&l| boxed(path.estimate(l))).collect()
            }
            FireSetting::Type1 => params
                .iter()
                .map(|&l| boxed(solve_type1(z_p, z_q, &k, &k_h, l)))
                .collect(),
            FireSetting::Combined { gamma } => {
                let grams = GramBundle::new(z_p, z_q, &k, &k_h)?;
                params
                    .iter()
                    .map(|&l| {
                        boxed(
                            crate::error::require_positive("lambda", l)
                                .and_then(|_| solve_combined_grams(&grams, *gamma, l))
                                .and_then(|v| RatioEstimate::new(z_p.clone(), v, k_h, Scale::Plain)),
                        )
                    })
                    .collect()
            }
            FireSetting::RkhsLoss => params
                .iter()
                .map(|&l| boxed(solve_rkhs_loss(z_p, z_q, &k, &k_h, l)))
                .collect(),
            FireSetting::Type15 { bandwidth_ratio } => {
                let k_prime = k.scaled(*bandwidth_ratio)?;
                params
                    .iter()
                    .map(|&l| boxed(solve_type15(z_p, z_q, &k, &k_prime, &k_h, l)))
                    .collect()
            }
            FireSetting::Type2 { q } => {
                let q_values = q.pdf_at(z_p)?;
                params
                    .iter()
                    .map(|&l| boxed(solve_type2(z_p, &q_values, &k, &k_h, l)))
                    .collect()
            }
            FireSetting::Spectral => {
                let basis = SpectralBasis::new(z_p, &k)?;
                let k_pq = scaled_kernel_matrix(z_p, z_q, &k, 1.0 / z_q.nrows() as f64)?;
                let target = row_sums(k_pq.as_ref());
                params
                    .iter()
                    .map(|&c| {
                        if c.fract() != 0.0 || c < 1.0 {
                            return Err(invalid("cutoff_k", format!("must be a positive integer, got {c}")));
                        }
                        boxed(basis.solve(&target, c as usize))
                    })
                    .collect()
            }
        })
    }
}

/// TIKDE; the parameter axis holds thresholds relative to `max p̂`.
#[derive(Clone, Copy, Debug, Default)]
pub struct TikdeEstimator;

impl RatioEstimator for TikdeEstimator {
    fn name(&self) -> String {
        "tikde".into()
    }

    fn fit_grid(
        &self,
        z_p: &SampleMatrix,
        z_q: &SampleMatrix,
        t: f64,
        params: &[f64],
    ) -> Result<Vec<Result<BoxedModel>>> {
        let scale = tikde_epsilon_grid(z_p, t)?[0] / crate::baselines::TIKDE_RELATIVE_THRESHOLDS[0];
        Ok(params.iter().map(|&r| boxed(tikde(z_p, z_q, t, r * scale))).collect())
    }
}

/// Unconstrained LSIF; the parameter axis holds `λ`.
#[derive(Clone, Copy, Debug, Default)]
pub struct LsifEstimator;

impl RatioEstimator for LsifEstimator {
    fn name(&self) -> String {
        "lsif".into()
    }

    fn fit_grid(
        &self,
        z_p: &SampleMatrix,
        z_q: &SampleMatrix,
        t: f64,
        params: &[f64],
    ) -> Result<Vec<Result<BoxedModel>>> {
        let path = LsifPath::new(z_p, z_q, t)?;
        Ok(params.iter().map(|&l| boxed(path.estimate(l))).collect())
    }
}
