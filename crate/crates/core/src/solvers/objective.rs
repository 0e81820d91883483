//! The empirical regularized objectives as explicit quadratics in `v`.
//! Used as test oracles for the closed-form solvers.

use crate::error::{Error, Result};
use crate::linalg::{dot, mat_t_vec, mat_vec};

use super::{check_gamma, GramBundle};

/// Which empirical objective to evaluate.
#[derive(Clone, Copy, Debug)]
pub enum Objective<'a> {
    /// `(1/n)‖K_pp K_H v − K_pq 1‖²`
    Type1,
    /// `(γ/n)‖K_pp K_H v − K_pq 1‖² + ((1−γ)/m)‖K_qp K_H v − K_qq 1‖²`
    Combined { gamma: f64 },
    /// `‖K_{z_p} f − K_{z_q} 1‖²` in the RKHS of the smoothing kernel.
    RkhsLoss,
    /// `(1/n)‖K_pp K_H v − q‖²`
    Type2 { target: &'a [f64] },
    /// `(1/n)‖K_pp K_H v − K′_pq 1‖²`
    Type15 { target: &'a [f64] },
}

fn check(grams: &GramBundle, v: &[f64], obj: &Objective<'_>) -> Result<()> {
    let n = grams.n();
    if v.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: v.len() });
    }
    match obj {
        Objective::Type2 { target } | Objective::Type15 { target } if target.len() != n => {
            Err(Error::DimensionMismatch { expected: n, found: target.len() })
        }
        Objective::Combined { gamma } => check_gamma(*gamma),
        _ => Ok(()),
    }
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Value of the regularized objective `loss(v) + λ vᵀ K_H v`.
pub fn empirical_objective(obj: Objective<'_>, v: &[f64], grams: &GramBundle, lambda: f64) -> Result<f64> {
    check(grams, v, &obj)?;
    let n = grams.n() as f64;
    let m = grams.m() as f64;
    let f_p = mat_vec(grams.k_h.as_ref(), v);
    let penalty = lambda * dot(v, &f_p);
    let smoothed = mat_vec(grams.k_pp.as_ref(), &f_p);
    let loss = match obj {
        Objective::Type1 => {
            let r = sub(&smoothed, &grams.q_smooth_at_p());
            dot(&r, &r) / n
        }
        Objective::Type2 { target } | Objective::Type15 { target } => {
            let r = sub(&smoothed, target);
            dot(&r, &r) / n
        }
        Objective::Combined { gamma } => {
            let rp = sub(&smoothed, &grams.q_smooth_at_p());
            let at_q = mat_vec(grams.k_qp.as_ref(), &f_p);
            let rq = sub(&at_q, &grams.q_smooth_at_q());
            gamma / n * dot(&rp, &rp) + (1.0 - gamma) / m * dot(&rq, &rq)
        }
        Objective::RkhsLoss => {
            let cross = dot(&f_p, &grams.q_smooth_at_p());
            let qq: f64 = grams.q_smooth_at_q().iter().sum::<f64>() / m;
            (dot(&f_p, &smoothed) / n - 2.0 * cross / n + qq).max(0.0)
        }
    };
    Ok(loss + penalty)
}

/// Analytic gradient of [`empirical_objective`] with respect to `v`.
pub fn objective_gradient(obj: Objective<'_>, v: &[f64], grams: &GramBundle, lambda: f64) -> Result<Vec<f64>> {
    check(grams, v, &obj)?;
    let n = grams.n() as f64;
    let m = grams.m() as f64;
    let k_h = grams.k_h.as_ref();
    let k_pp = grams.k_pp.as_ref();
    let f_p = mat_vec(k_h, v);
    let smoothed = mat_vec(k_pp, &f_p);
    // Everything below is K_H applied to an inner vector.
    let inner: Vec<f64> = match obj {
        Objective::Type1 | Objective::Type2 { .. } | Objective::Type15 { .. } => {
            let target = match obj {
                Objective::Type2 { target } | Objective::Type15 { target } => target.to_vec(),
                _ => grams.q_smooth_at_p(),
            };
            let back = mat_t_vec(k_pp, &sub(&smoothed, &target));
            back.iter().map(|x| 2.0 * x / n).collect()
        }
        Objective::Combined { gamma } => {
            let bp = mat_t_vec(k_pp, &sub(&smoothed, &grams.q_smooth_at_p()));
            let at_q = mat_vec(grams.k_qp.as_ref(), &f_p);
            let bq = mat_t_vec(grams.k_qp.as_ref(), &sub(&at_q, &grams.q_smooth_at_q()));
            bp.iter()
                .zip(&bq)
                .map(|(p, q)| 2.0 * (gamma / n * p + (1.0 - gamma) / m * q))
                .collect()
        }
        Objective::RkhsLoss => sub(&smoothed, &grams.q_smooth_at_p())
            .iter()
            .map(|x| 2.0 * x / n)
            .collect(),
    };
    let with_penalty: Vec<f64> = inner.iter().zip(v).map(|(g, vi)| g + 2.0 * lambda * vi).collect();
    Ok(mat_vec(k_h, &with_penalty))
}
