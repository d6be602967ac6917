//! Gaussian fluctuation of the barrier under coupling disorder.
//!
//! With w_{l,n} = w_l + Z_l/sqrt(n), a critical point moves as
//! x_n = x + Y^x/sqrt(n), and sqrt(n)(Delta F_n - Delta F) tends to a linear
//! functional c.Z. The Y contributions carry the coefficient
//! -K a_j w_j + w_j (a_j K + h) - h w_j, which vanishes because F is stationary
//! at x; they are folded in explicitly anyway so the cancellation is visible.

use serde::Serialize;

use super::det_leading_factor;
use crate::disorder::{quenched, DisorderDistribution, DisorderRealization};
use crate::error::{Error, Result};
use crate::landscape::entropy::cramer_entropy_split;
use crate::landscape::{find_fixed_points, CriticalPoint, ModelParams};
use crate::magnetization::MagnetizationVector;

#[derive(Debug, Clone, Serialize)]
pub struct ExponentFluctuation {
    pub delta_f_limit: f64,
    pub variance_marginal: f64,
    pub variance_multinomial: f64,
    /// c with sqrt(n)(Delta F_n - Delta F) -> c.Z.
    pub coefficients: Vec<f64>,
    /// Row j holds the coefficients of Y^t_j in Z.
    pub y_saddle: Vec<Vec<f64>>,
    /// Row j holds the coefficients of Y^m_j in Z.
    pub y_minimum: Vec<Vec<f64>>,
}

/// Y^x_j = beta a_j (1 - x_j^2) sum_l a_l x_l Z_l / (1 - beta sum a^2 w (1 - x^2)).
pub fn y_map(x: &MagnetizationVector, dist: &DisorderDistribution, p: &ModelParams) -> Result<Vec<Vec<f64>>> {
    let a = dist.support();
    let denom = det_leading_factor(x, dist.weights(), a, p);
    if denom.abs() < 1e-12 {
        return Err(Error::DegenerateDenominator(denom));
    }
    Ok((0..x.k())
        .map(|j| (0..x.k()).map(|l| p.beta * a[j] * x.chi(j) * a[l] * x.get(l) / denom).collect())
        .collect())
}

fn point_terms(x: &MagnetizationVector, k: f64, dist: &DisorderDistribution, p: &ModelParams) -> (Vec<f64>, Vec<f64>) {
    let a = dist.support();
    let w = dist.weights();
    let direct = (0..x.k())
        .map(|l| -a[l] * k * x.get(l) - p.h * x.get(l) + cramer_entropy_split(x.one_minus(l), x.one_plus(l)) / p.beta)
        .collect();
    let y_weight = (0..x.k())
        .map(|j| {
            let artanh_over_beta = 0.5 * (x.one_plus(j) / x.one_minus(j)).ln() / p.beta;
            -k * a[j] * w[j] + w[j] * artanh_over_beta - p.h * w[j]
        })
        .collect();
    (direct, y_weight)
}

pub fn multinomial_variance(c: &[f64], w: &[f64]) -> f64 {
    let mut v = 0.0;
    for i in 0..c.len() {
        for j in 0..c.len() {
            let cov = if i == j { w[i] * (1.0 - w[i]) } else { -w[i] * w[j] };
            v += c[i] * c[j] * cov;
        }
    }
    v.max(0.0)
}

pub fn marginal_variance(c: &[f64], w: &[f64]) -> f64 {
    c.iter().zip(w).map(|(c, w)| c * c * w * (1.0 - w)).sum()
}

pub fn exponent_fluctuation(
    dist: &DisorderDistribution,
    p: &ModelParams,
    minimum: &CriticalPoint,
    saddle: &CriticalPoint,
) -> Result<ExponentFluctuation> {
    let y_saddle = y_map(&saddle.m, dist, p)?;
    let y_minimum = y_map(&minimum.m, dist, p)?;
    let (direct_t, weight_t) = point_terms(&saddle.m, saddle.k_value, dist, p);
    let (direct_m, weight_m) = point_terms(&minimum.m, minimum.k_value, dist, p);
    let k = dist.k();
    let coefficients: Vec<f64> = (0..k)
        .map(|l| {
            let via_y: f64 = (0..k).map(|j| weight_t[j] * y_saddle[j][l] - weight_m[j] * y_minimum[j][l]).sum();
            direct_t[l] - direct_m[l] + via_y
        })
        .collect();
    let w = dist.weights();
    Ok(ExponentFluctuation {
        delta_f_limit: saddle.free_energy - minimum.free_energy,
        variance_marginal: marginal_variance(&coefficients, w),
        variance_multinomial: multinomial_variance(&coefficients, w),
        coefficients,
        y_saddle,
        y_minimum,
    })
}

/// sqrt(n)(Delta F_n - Delta F) for one realization, matching critical points
/// of the quenched landscape to the limit ones by their rank in K.
pub fn scaled_barrier_deviation(
    real: &DisorderRealization,
    p: &ModelParams,
    limit_count: usize,
    minimum_rank: usize,
    saddle_rank: usize,
    delta_f_limit: f64,
) -> Result<f64> {
    let q = quenched(real)?;
    let report = find_fixed_points(&q, p, 1e-12);
    if report.count() != limit_count {
        return Err(Error::InvalidInput(format!(
            "quenched landscape has {} critical points, limit has {limit_count}",
            report.count()
        )));
    }
    let delta = report.points[saddle_rank].free_energy - report.points[minimum_rank].free_energy;
    Ok(real.n_f64().sqrt() * (delta - delta_f_limit))
}
